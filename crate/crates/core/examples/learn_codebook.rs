//! Learns a 4-frame spectro-temporal codebook from a synthetic corpus and
//! exports a few un-whitened bases as CSV grids and PNG images.
//!
//! `cargo run --release --example learn_codebook -- [out-dir]`

use std::path::PathBuf;

use birdsong::dataset::ManifestEntry;
use birdsong::pipeline::{export_bases, LearningParams, Pipeline};
use birdsong::synth::{generate_corpus, SynthConfig};

fn main() -> birdsong::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("bases"));
    let data = tempfile::tempdir()?;
    let manifest = generate_corpus(data.path(), &SynthConfig { clips_per_class: 10, ..SynthConfig::default() })?;
    let clips: Vec<&ManifestEntry> = manifest.entries().iter().collect();

    let pipeline = Pipeline::default();
    let learning = LearningParams { k: 100, ..LearningParams::default() };
    let (_, model) = pipeline.learn_features("melspec-kfl4-ms".parse()?, false, &learning, &clips)?;
    let cb = model.first_layer();
    println!("codebook: {} bases of {} dims ({} frames x {} bands)", cb.k(), cb.dim(), cb.frames_per_patch(), cb.frame_dim());

    let written = export_bases(cb, 12, &out, true)?;
    println!("wrote {} bases to {}", written.len(), out.display());
    Ok(())
}
