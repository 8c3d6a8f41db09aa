//! Synthetic labelled corpora: bird-like motifs over pink noise, written as
//! WAV files plus a manifest.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{write_wav, Manifest, ManifestEntry, STANDARD_SAMPLE_RATE};
use crate::error::{Error, Result};

/// One motif element. Chirps sweep linearly in frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Tone { freq: f64, seconds: f64 },
    Chirp { from: f64, to: f64, seconds: f64 },
    Gap { seconds: f64 },
}

impl Segment {
    fn seconds(&self) -> f64 {
        match *self {
            Segment::Tone { seconds, .. } | Segment::Chirp { seconds, .. } | Segment::Gap { seconds } => seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Motif(pub Vec<Segment>);

impl Motif {
    pub fn seconds(&self) -> f64 {
        self.0.iter().map(Segment::seconds).sum()
    }

    /// Adds the motif into `out` starting at `start` with a Hann-tapered
    /// envelope per segment. `pitch` scales every frequency.
    pub fn render_into(&self, out: &mut [f64], start: usize, sample_rate: u32, amplitude: f64, pitch: f64) {
        let sr = sample_rate as f64;
        let mut at = start;
        let mut phase = 0.0;
        for seg in &self.0 {
            let n = (seg.seconds() * sr).round() as usize;
            let (f0, f1) = match *seg {
                Segment::Tone { freq, .. } => (freq, freq),
                Segment::Chirp { from, to, .. } => (from, to),
                Segment::Gap { .. } => {
                    at += n;
                    continue;
                }
            };
            for i in 0..n {
                let Some(slot) = out.get_mut(at + i) else { break };
                let frac = i as f64 / n.max(1) as f64;
                let f = pitch * (f0 + (f1 - f0) * frac);
                phase += 2.0 * PI * f / sr;
                let env = 0.5 - 0.5 * (2.0 * PI * (i as f64 + 0.5) / n as f64).cos();
                *slot += amplitude * env * phase.sin();
            }
            at += n;
        }
    }
}

/// Pink (1/f) noise from white noise via a three-pole filter
/// (P. Kellet's economy coefficients), scaled to unit RMS.
pub fn pink_noise(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    let mut out: Vec<f64> = (0..len)
        .map(|_| {
            let white: f64 = rng.gen_range(-1.0..1.0);
            b0 = 0.99765 * b0 + white * 0.0990460;
            b1 = 0.96300 * b1 + white * 0.2965164;
            b2 = 0.57000 * b2 + white * 1.0526913;
            b0 + b1 + b2 + white * 0.1848
        })
        .collect();
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v /= rms);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    /// Each class a distinct steady tone followed by a chirp.
    ToneChirp,
    /// Classes come in pairs sharing a frequency band: a rising and a
    /// falling sweep of the same span. Per-band energy statistics cannot
    /// tell the two apart; short spectro-temporal patches can.
    SweepPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub kind: CorpusKind,
    pub classes: usize,
    pub clips_per_class: usize,
    pub clip_seconds: f64,
    pub folds: usize,
    /// Probability that a clip carries one extra class besides its own.
    pub extra_label_prob: f64,
    /// Motif amplitude relative to unit-RMS noise.
    pub signal_level: f64,
    pub noise_level: f64,
    /// Motif onsets per clip per label.
    pub calls_per_clip: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            kind: CorpusKind::ToneChirp,
            classes: 8,
            clips_per_class: 40,
            clip_seconds: 3.0,
            folds: 2,
            extra_label_prob: 0.0,
            signal_level: 0.25,
            noise_level: 0.05,
            calls_per_clip: 4,
            seed: 0,
        }
    }
}

pub fn class_name(c: usize) -> String {
    format!("sp{c:02}")
}

/// The motif for class `c`.
pub fn class_motif(kind: CorpusKind, c: usize) -> Motif {
    match kind {
        CorpusKind::ToneChirp => {
            let tone = 1200.0 + 700.0 * c as f64;
            let sweep = if c % 2 == 0 { 1.0 + 0.15 * (1 + c / 2) as f64 } else { 1.0 - 0.08 * (1 + c / 2) as f64 };
            Motif(vec![
                Segment::Tone { freq: tone, seconds: 0.12 + 0.02 * (c % 3) as f64 },
                Segment::Gap { seconds: 0.03 },
                Segment::Chirp { from: tone, to: tone * sweep, seconds: 0.15 },
            ])
        }
        CorpusKind::SweepPairs => {
            let band = c / 2;
            let lo = 1500.0 * 1.9f64.powi(band as i32);
            let hi = lo * 1.8;
            let (from, to) = if c % 2 == 0 { (lo, hi) } else { (hi, lo) };
            // about four frames long, repeated as a short trill
            Motif(vec![
                Segment::Chirp { from, to, seconds: 0.09 },
                Segment::Gap { seconds: 0.04 },
                Segment::Chirp { from, to, seconds: 0.09 },
                Segment::Gap { seconds: 0.04 },
                Segment::Chirp { from, to, seconds: 0.09 },
            ])
        }
    }
}

/// Renders one clip carrying `labels`.
pub fn render_clip(config: &SynthConfig, labels: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sr = STANDARD_SAMPLE_RATE;
    let len = (config.clip_seconds * sr as f64).round() as usize;
    let mut out: Vec<f64> = pink_noise(len, rng).into_iter().map(|v| v * config.noise_level).collect();
    for &c in labels {
        let motif = class_motif(config.kind, c);
        let span = ((config.clip_seconds - motif.seconds()) * sr as f64).max(1.0) as usize;
        for _ in 0..config.calls_per_clip {
            let start = rng.gen_range(0..span);
            let amp = config.signal_level * rng.gen_range(0.6..1.0);
            let pitch = rng.gen_range(0.97..1.03);
            motif.render_into(&mut out, start, sr, amp, pitch);
        }
    }
    out
}

/// Writes the corpus under `dir` (`audio/*.wav` and `manifest.csv`) and
/// returns the loaded manifest. Folds are assigned round-robin within each
/// primary class.
pub fn generate_corpus(dir: &Path, config: &SynthConfig) -> Result<Manifest> {
    if config.classes == 0 || config.clips_per_class == 0 || config.folds == 0 {
        return Err(Error::Config("synthetic corpus needs classes, clips and folds".into()));
    }
    if config.kind == CorpusKind::SweepPairs && config.classes % 2 != 0 {
        return Err(Error::Config("sweep-pair corpora need an even class count".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut entries = Vec::new();
    let mut order: Vec<(usize, usize)> =
        (0..config.classes).flat_map(|c| (0..config.clips_per_class).map(move |i| (c, i))).collect();
    order.shuffle(&mut rng);
    for (c, i) in order {
        let mut labels = vec![c];
        if config.classes > 1 && rng.gen_bool(config.extra_label_prob.clamp(0.0, 1.0)) {
            let other = (c + rng.gen_range(1..config.classes)) % config.classes;
            labels.push(other);
        }
        let clip_id = format!("{}-{i:03}", class_name(c));
        let path = dir.join("audio").join(format!("{clip_id}.wav"));
        write_wav(&path, &render_clip(config, &labels, &mut rng), STANDARD_SAMPLE_RATE)?;
        entries.push(ManifestEntry {
            clip_id,
            audio_path: path,
            labels: labels.iter().map(|&l| class_name(l)).collect::<BTreeSet<_>>(),
            fold: Some(i % config.folds),
            recordist: None,
        });
    }
    entries.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    let manifest = Manifest::new("synthetic", entries)?;
    manifest.save(&dir.join("manifest.csv"))?;
    crate::dataset::load_manifest(&dir.join("manifest.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{decode_audio, Labelling};
    use crate::spectral::{mel_spectrogram, MelFilterbank, FRAME_SIZE, MEL_BANDS, MIN_FREQ_HZ};
    use crate::dataset::AudioClip;

    #[test]
    fn pink_noise_tilts_downwards() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = pink_noise(1 << 16, &mut rng);
        // energy in octave 200-400 Hz vs 6.4-12.8 kHz via a crude DFT probe
        let band_power = |lo: f64, hi: f64| {
            let mut p = 0.0;
            let mut f = lo;
            while f < hi {
                let (mut re, mut im) = (0.0, 0.0);
                for (n, v) in x.iter().enumerate().take(8192) {
                    let w = 2.0 * PI * f * n as f64 / 44_100.0;
                    re += v * w.cos();
                    im += v * w.sin();
                }
                p += re * re + im * im;
                f *= 1.1;
            }
            p
        };
        assert!(band_power(200.0, 400.0) > 5.0 * band_power(6400.0, 12_800.0));
    }

    #[test]
    fn sweep_pair_is_mirror_image() {
        let up = class_motif(CorpusKind::SweepPairs, 2);
        let down = class_motif(CorpusKind::SweepPairs, 3);
        match (up.0[0], down.0[0]) {
            (Segment::Chirp { from: a, to: b, .. }, Segment::Chirp { from: c, to: d, .. }) => {
                assert_eq!((a, b), (d, c));
                assert!(b > a);
            }
            _ => panic!("expected chirps"),
        }
    }

    #[test]
    fn tone_chirp_motif_energy_lands_in_its_band() {
        let motif = class_motif(CorpusKind::ToneChirp, 3);
        let mut x = vec![0.0; 44_100];
        motif.render_into(&mut x, 1000, 44_100, 1.0, 1.0);
        let spec = mel_spectrogram(&AudioClip::new("m", x, 44_100)).unwrap();
        let fb = MelFilterbank::new(44_100, FRAME_SIZE, MEL_BANDS, MIN_FREQ_HZ);
        let totals: Vec<f64> = (0..MEL_BANDS).map(|b| spec.values.column(b).sum()).collect();
        let top = totals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let tone = 1200.0 + 700.0 * 3.0;
        let nearest = (0..MEL_BANDS)
            .min_by(|&a, &b| (fb.centers[a] - tone).abs().total_cmp(&(fb.centers[b] - tone).abs()))
            .unwrap();
        assert!(top.abs_diff(nearest) <= 1, "top {top}, tone band {nearest}");
    }

    #[test]
    fn corpus_layout() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig { classes: 3, clips_per_class: 4, clip_seconds: 1.0, ..SynthConfig::default() };
        let m = generate_corpus(dir.path(), &cfg).unwrap();
        assert_eq!(m.len(), 12);
        assert_eq!(m.labelling(), Labelling::SingleLabel);
        assert_eq!(m.fold_count(), Some(2));
        assert_eq!(m.fold_members(0).count(), 6);
        let clip = decode_audio(&m.entries()[0].audio_path, 44_100).unwrap();
        assert_eq!(clip.samples.len(), 44_100);
        let again = tempfile::tempdir().unwrap();
        generate_corpus(again.path(), &cfg).unwrap();
        let a = std::fs::read(dir.path().join("audio/sp00-000.wav")).unwrap();
        let b = std::fs::read(again.path().join("audio/sp00-000.wav")).unwrap();
        assert_eq!(a, b);
        let multi = SynthConfig { extra_label_prob: 1.0, ..cfg };
        let m = generate_corpus(tempfile::tempdir().unwrap().path(), &multi).unwrap();
        assert_eq!(m.labelling(), Labelling::Multilabel);
    }
}
