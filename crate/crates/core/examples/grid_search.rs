//! A reduced configuration grid over a synthetic corpus, written as a
//! per-fold CSV report.
//!
//! `cargo run --release --example grid_search -- [results.csv]`

use std::path::PathBuf;

use birdsong::evaluate::write_reports_csv;
use birdsong::forest::{ClassifierMode, ForestParams};
use birdsong::pipeline::{Dataset, GridSpec, LearningParams, Pipeline};
use birdsong::summarize::DecisionWindow;
use birdsong::synth::{generate_corpus, SynthConfig};

fn main() -> birdsong::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("grid_results.csv"));
    let dir = tempfile::tempdir()?;
    let cfg = SynthConfig { classes: 5, clips_per_class: 16, ..SynthConfig::default() };
    let data = Dataset::new(generate_corpus(dir.path(), &cfg)?)?;

    let mut grid = GridSpec::full(ClassifierMode::SingleLabel);
    println!("the full grid has {} runs; this example runs a slice of it", grid.len());
    grid.noise_reduction = vec![false];
    grid.windows = vec![DecisionWindow::Seconds(1), DecisionWindow::Whole];
    grid.base.learning = LearningParams { k: 100, ..LearningParams::default() };
    grid.base.forest = ForestParams { n_trees: 100, ..ForestParams::default() };
    println!("running {} runs", grid.len());

    let pipeline = Pipeline::default();
    let outcome = pipeline.run_grid(&grid, &data);
    let mut best: Vec<_> = outcome.reports.iter().collect();
    best.sort_by(|a, b| b.auc.total_cmp(&a.auc));
    for r in best.iter().take(5) {
        println!("{:>24} {:>16} window {:>5} pool {:>4}: auc {:.3}", r.config["feature"], r.config["classifier"], r.config["window"], r.config["pool"], r.auc);
    }
    for (config, err) in &outcome.failures {
        println!("failed: {} {}: {err}", config["feature"], config["window"]);
    }
    println!("{} failed runs, {} audit leaks", outcome.failures.len(), pipeline.audit.leaks().len());
    write_reports_csv(&outcome.reports, &out)?;
    println!("report: {}", out.display());
    Ok(())
}
