//! Auxiliary data in the three augmentation modes, against a baseline.

use birdsong::forest::ForestParams;
use birdsong::pipeline::{AugmentMode, Dataset, LearningParams, Pipeline, RunConfig};
use birdsong::synth::{generate_corpus, SynthConfig};

fn main() -> birdsong::Result<()> {
    let dir = tempfile::tempdir()?;
    let primary = generate_corpus(&dir.path().join("primary"), &SynthConfig { clips_per_class: 6, ..SynthConfig::default() })?;
    // a noisier recording condition of the same species
    let aux_cfg = SynthConfig { clips_per_class: 10, noise_level: 0.15, seed: 99, ..SynthConfig::default() };
    let auxiliary = generate_corpus(&dir.path().join("aux"), &aux_cfg)?;

    let config = RunConfig {
        feature: "melspec-kfl4-ms".parse()?,
        learning: LearningParams { k: 100, ..LearningParams::default() },
        forest: ForestParams { n_trees: 100, ..ForestParams::default() },
        ..RunConfig::default()
    };
    let pipeline = Pipeline::default();
    let base = pipeline.run_single(&config, &Dataset::new(primary.clone())?)?;
    println!("{:>22}: auc {:.3} map {:.3}", "baseline", base.auc, base.map);
    for mode in [AugmentMode::FeaturesOnly, AugmentMode::FeaturesAndTraining, AugmentMode::CrossCondition] {
        let r = pipeline.run_augmented(&config, &primary, &auxiliary, mode)?;
        println!("{mode:>22}: auc {:.3} map {:.3}", r.auc, r.map);
    }
    println!("audit leaks: {}", pipeline.audit.leaks().len());
    Ok(())
}
