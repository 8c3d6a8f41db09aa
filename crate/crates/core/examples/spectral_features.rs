//! Mel spectrogram, median noise reduction and MFCCs of a synthetic call.

use birdsong::dataset::{AudioClip, STANDARD_SAMPLE_RATE};
use birdsong::spectral::{mel_spectrogram, mfcc_with_deltas, noise_reduce};
use birdsong::synth::{render_clip, SynthConfig};
use rand::SeedableRng;

fn main() -> birdsong::Result<()> {
    let cfg = SynthConfig { clip_seconds: 2.0, ..SynthConfig::default() };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let clip = AudioClip::new("demo", render_clip(&cfg, &[3], &mut rng), STANDARD_SAMPLE_RATE);

    let mel = mel_spectrogram(&clip)?;
    println!("mel: {} frames x {} bands, hop {} samples", mel.frames(), mel.bands(), mel.frame_hop);

    let loudest = |s: &birdsong::spectral::MelSpectrogram| {
        let totals: Vec<f64> = (0..s.bands()).map(|m| s.values.column(m).sum()).collect();
        let m = totals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        (m, s.band_centers[m])
    };
    let (band, hz) = loudest(&mel);
    println!("strongest band {band} (centre {hz:.0} Hz)");

    let clean = noise_reduce(&mel);
    let zero = clean.values.iter().filter(|v| **v == 0.0).count() as f64 / clean.values.len() as f64;
    println!("after noise reduction {:.0}% of cells are zero", 100.0 * zero);

    let mfcc = mfcc_with_deltas(&mel);
    println!("mfcc + deltas: {} frames x {} dims", mfcc.frames(), mfcc.dim());
    Ok(())
}
