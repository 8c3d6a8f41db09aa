//! Two-layer feature learning: 4-frame bases, max-pooling by 8, then
//! 4-frame bases over the pooled activations.

use birdsong::dataset::{decode_audio, STANDARD_SAMPLE_RATE};
use birdsong::encode::encode_two_layer;
use birdsong::featlearn::{learn_two_layer, SkmParams, TwoLayerParams};
use birdsong::spectral::mel_spectrogram;
use birdsong::synth::{generate_corpus, SynthConfig};

fn main() -> birdsong::Result<()> {
    let dir = tempfile::tempdir()?;
    let cfg = SynthConfig { classes: 4, clips_per_class: 6, clip_seconds: 8.0, ..SynthConfig::default() };
    let manifest = generate_corpus(dir.path(), &cfg)?;
    let series = manifest
        .entries()
        .iter()
        .map(|e| Ok(mel_spectrogram(&decode_audio(&e.audio_path, STANDARD_SAMPLE_RATE)?)?.to_series()))
        .collect::<birdsong::Result<Vec<_>>>()?;

    let params = TwoLayerParams::from_base(&SkmParams { k: 32, sample_size: 5000, ..SkmParams::default() }.with_frames(4));
    let model = learn_two_layer(&series, &params)?;
    println!(
        "layer 1: {} x {}, pool {}, layer 2: {} x {}, clips need >= {} frames",
        model.layer1.k(),
        model.layer1.dim(),
        model.pool_factor,
        model.layer2.k(),
        model.layer2.dim(),
        model.min_frames()
    );
    let encoded = encode_two_layer(&model, &series[0])?;
    println!("clip of {} frames -> {} x {} activations", series[0].frames(), encoded.frames(), encoded.dim());
    Ok(())
}
