//! Generates a synthetic corpus and crossvalidates a few feature types on it.
//!
//! `cargo run --release --example synthetic_benchmark -- [tone|sweep] [k]`

use std::time::Instant;

use birdsong::forest::{ClassifierMode, ForestParams};
use birdsong::pipeline::{Dataset, LearningParams, Pipeline, RunConfig};
use birdsong::synth::{generate_corpus, CorpusKind, SynthConfig};

fn main() -> birdsong::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let sweep = args.first().is_some_and(|a| a == "sweep");
    let k: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let synth = if sweep {
        SynthConfig { kind: CorpusKind::SweepPairs, classes: 6, clips_per_class: 30, extra_label_prob: 0.5, ..SynthConfig::default() }
    } else {
        SynthConfig::default()
    };
    let dir = tempfile::tempdir()?;
    let t = Instant::now();
    let manifest = generate_corpus(dir.path(), &synth)?;
    println!("{} clips generated in {:.1?}", manifest.len(), t.elapsed());
    let data = Dataset::new(manifest)?;
    let pipeline = Pipeline::default();
    let features: &[&str] = if sweep { &["melspec-kfl4-ms", "melspec-ms", "mfcc-ms"] } else { &["melspec-kfl4-ms"] };
    for f in features {
        let config = RunConfig {
            feature: f.parse()?,
            classifier: ClassifierMode::Multilabel,
            forest: ForestParams::default(),
            learning: LearningParams { k, ..LearningParams::default() },
            ..RunConfig::default()
        };
        let t = Instant::now();
        let r = pipeline.run_single(&config, &data)?;
        println!("{f:>16}: auc {:.4} map {:.4} ({:.1?})", r.auc, r.map, t.elapsed());
    }
    Ok(())
}
