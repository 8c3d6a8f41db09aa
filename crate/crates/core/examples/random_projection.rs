//! The dimensionality control: every feature type projected to 200
//! dimensions before classification, next to its unprojected score.

use birdsong::forest::ForestParams;
use birdsong::pipeline::{Dataset, LearningParams, Pipeline, RunConfig};
use birdsong::synth::{generate_corpus, CorpusKind, SynthConfig};

fn main() -> birdsong::Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = SynthConfig { kind: CorpusKind::SweepPairs, classes: 6, clips_per_class: 20, ..SynthConfig::default() };
    let data = Dataset::new(generate_corpus(dir.path(), &cfg)?)?;
    let pipeline = Pipeline::default();
    for feature in ["mfcc-ms", "melspec-ms", "melspec-modul", "melspec-kfl4-ms"] {
        let base = RunConfig {
            feature: feature.parse()?,
            learning: LearningParams { k: 200, ..LearningParams::default() },
            forest: ForestParams { n_trees: 100, ..ForestParams::default() },
            ..RunConfig::default()
        };
        let plain = pipeline.run_single(&base, &data)?;
        let projected = pipeline.run_single(&RunConfig { random_projection: Some(1), ..base }, &data)?;
        println!("{feature:>16}: auc {:.3}, projected to 200 dims {:.3}", plain.auc, projected.auc);
    }
    Ok(())
}
