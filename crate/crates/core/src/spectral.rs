//! Mel spectrograms, median noise reduction and MFCC+delta features.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::dataset::AudioClip;
use crate::error::{Error, Result};
use crate::series::{DimMeaning, FeatureSeries};

pub const FRAME_SIZE: usize = 1024;
pub const MEL_BANDS: usize = 40;
pub const MIN_FREQ_HZ: f64 = 500.0;
pub const MFCC_COEFFS: usize = 13;
pub const MFCC_DIM: usize = 2 * MFCC_COEFFS;
/// Added to band values before the log in MFCC computation.
pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// T×M, non-negative.
    pub values: Array2<f64>,
    pub frame_hop: u32,
    pub sample_rate: u32,
    pub band_centers: Vec<f64>,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn bands(&self) -> usize {
        self.values.ncols()
    }

    pub fn to_series(&self) -> FeatureSeries {
        FeatureSeries::new(self.values.clone(), DimMeaning::Mel, self.frame_hop)
    }

    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Rebuilds a spectrogram from a cached mel series.
    pub fn from_series(series: &FeatureSeries, sample_rate: u32) -> Result<Self> {
        if series.meaning != DimMeaning::Mel {
            return Err(Error::Config(format!("expected a mel series, got {:?}", series.meaning)));
        }
        let fb = MelFilterbank::new(sample_rate, FRAME_SIZE, series.dim(), MIN_FREQ_HZ);
        Ok(MelSpectrogram {
            values: series.values.clone(),
            frame_hop: series.frame_hop,
            sample_rate,
            band_centers: fb.centers,
        })
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the Mel scale between `f_min` and
/// Nyquist. Each filter's weights sum to one.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// bands × (fft_size/2 + 1)
    pub weights: Array2<f64>,
    pub centers: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(sample_rate: u32, fft_size: usize, bands: usize, f_min: f64) -> Self {
        let nyquist = sample_rate as f64 / 2.0;
        let bins = fft_size / 2 + 1;
        let (lo, hi) = (hz_to_mel(f_min), hz_to_mel(nyquist));
        let edges: Vec<f64> = (0..bands + 2)
            .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (bands + 1) as f64))
            .collect();
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let mut weights = Array2::zeros((bands, bins));
        for b in 0..bands {
            let (left, center, right) = (edges[b], edges[b + 1], edges[b + 2]);
            for k in 0..bins {
                let f = k as f64 * bin_hz;
                let w = if f > left && f <= center {
                    (f - left) / (center - left)
                } else if f > center && f < right {
                    (right - f) / (right - center)
                } else {
                    0.0
                };
                weights[[b, k]] = w;
            }
            let area: f64 = weights.row(b).sum();
            if area > 0.0 {
                weights.row_mut(b).mapv_inplace(|w| w / area);
            }
        }
        MelFilterbank {
            weights,
            centers: edges[1..=bands].to_vec(),
        }
    }
}

fn hamming(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Hamming-windowed, non-overlapping STFT magnitudes through the Mel
/// filterbank, before RMS normalization.
pub fn mel_magnitudes(clip: &AudioClip) -> Result<MelSpectrogram> {
    if clip.samples.is_empty() {
        return Err(Error::Empty(format!("clip `{}` has no samples", clip.clip_id)));
    }
    let frames = (clip.samples.len() / FRAME_SIZE).max(1);
    let fb = MelFilterbank::new(clip.sample_rate, FRAME_SIZE, MEL_BANDS, MIN_FREQ_HZ);
    let window = hamming(FRAME_SIZE);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FRAME_SIZE);
    let bins = FRAME_SIZE / 2 + 1;

    let mut values = Array2::zeros((frames, MEL_BANDS));
    let mut buf = vec![Complex::new(0.0, 0.0); FRAME_SIZE];
    let mut mag = Array1::zeros(bins);
    for t in 0..frames {
        let start = t * FRAME_SIZE;
        for (i, slot) in buf.iter_mut().enumerate() {
            let s = clip.samples.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex::new(s * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..bins {
            mag[k] = buf[k].norm();
        }
        values.row_mut(t).assign(&fb.weights.dot(&mag));
    }
    Ok(MelSpectrogram {
        values,
        frame_hop: FRAME_SIZE as u32,
        sample_rate: clip.sample_rate,
        band_centers: fb.centers,
    })
}

/// Mel spectrogram with 40 bands above 500 Hz, scaled so the RMS over all
/// cells is one. Silent clips stay all-zero.
pub fn mel_spectrogram(clip: &AudioClip) -> Result<MelSpectrogram> {
    let mut spec = mel_magnitudes(clip)?;
    let rms = spec.rms();
    if rms > 0.0 {
        spec.values.mapv_inplace(|v| v / rms);
    }
    Ok(spec)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Subtracts each band's median over time and clamps at zero.
pub fn noise_reduce(spec: &MelSpectrogram) -> MelSpectrogram {
    let mut out = spec.clone();
    if spec.frames() == 0 {
        return out;
    }
    for (m, mut column) in out.values.axis_iter_mut(Axis(1)).enumerate() {
        let mut band: Vec<f64> = spec.values.column(m).to_vec();
        let med = median(&mut band);
        column.mapv_inplace(|v| (v - med).max(0.0));
    }
    out
}

/// Orthonormal DCT-II of `x`, first `n_out` coefficients.
fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            let sum: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                .sum();
            scale * sum
        })
        .collect()
}

/// 13 MFCCs per frame followed by their first differences over time
/// (zero at the first frame), giving 26 columns.
pub fn mfcc_with_deltas(spec: &MelSpectrogram) -> FeatureSeries {
    let frames = spec.frames();
    let mut out = Array2::zeros((frames, MFCC_DIM));
    let mut prev: Option<Vec<f64>> = None;
    for t in 0..frames {
        let logs: Vec<f64> = spec.values.row(t).iter().map(|v| (v + LOG_FLOOR).ln()).collect();
        let coeffs = dct2(&logs, MFCC_COEFFS);
        for (k, &c) in coeffs.iter().enumerate() {
            out[[t, k]] = c;
            out[[t, MFCC_COEFFS + k]] = prev.as_ref().map_or(0.0, |p| c - p[k]);
        }
        prev = Some(coeffs);
    }
    FeatureSeries::new(out, DimMeaning::Mfcc, spec.frame_hop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tone(freq: f64, n: usize) -> AudioClip {
        let samples = (0..n)
            .map(|i| 0.5 * (2.0 * PI * freq * i as f64 / 44_100.0).sin())
            .collect();
        AudioClip::new("tone", samples, 44_100)
    }

    fn spec_from(values: Array2<f64>) -> MelSpectrogram {
        let bands = values.ncols();
        MelSpectrogram {
            values,
            frame_hop: 1024,
            sample_rate: 44_100,
            band_centers: vec![0.0; bands],
        }
    }

    #[test]
    fn one_second_gives_43_frames() {
        let s = mel_spectrogram(&tone(1000.0, 44_100)).unwrap();
        assert_eq!((s.frames(), s.bands()), (43, 40));
        assert!(s.values.iter().all(|v| *v >= 0.0 && v.is_finite()));
        assert!((s.rms() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn short_clip_is_padded_to_one_frame() {
        let s = mel_spectrogram(&tone(1000.0, 300)).unwrap();
        assert_eq!(s.frames(), 1);
        assert!(mel_spectrogram(&AudioClip::new("e", vec![], 44_100)).is_err());
    }

    #[test]
    fn filterbank_spans_500hz_to_nyquist() {
        let fb = MelFilterbank::new(44_100, 1024, 40, 500.0);
        assert_eq!(fb.centers.len(), 40);
        assert!(fb.centers[0] > 500.0 && fb.centers[39] < 22_050.0);
        assert!(fb.centers.windows(2).all(|w| w[0] < w[1]));
        for b in 0..40 {
            assert!((fb.weights.row(b).sum() - 1.0).abs() < 1e-12, "band {b} empty");
        }
        // no weight at or below 500 Hz (bin 11 is 473.7 Hz)
        for k in 0..=11 {
            assert!(fb.weights.column(k).iter().all(|w| *w == 0.0));
        }
    }

    #[test]
    fn khz_tone_peaks_in_nearest_band() {
        let s = mel_spectrogram(&tone(1000.0, 44_100)).unwrap();
        let nearest = s
            .band_centers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1000.0).abs().total_cmp(&(b.1 - 1000.0).abs()))
            .unwrap()
            .0;
        for t in 0..s.frames() {
            let row = s.values.row(t);
            let argmax = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert_eq!(argmax, nearest, "frame {t}");
        }
    }

    #[test]
    fn energy_below_cutoff_is_removed() {
        let low = mel_magnitudes(&tone(100.0, 44_100)).unwrap();
        let high = mel_magnitudes(&tone(1000.0, 44_100)).unwrap();
        let energy = |s: &MelSpectrogram| s.values.iter().map(|v| v * v).sum::<f64>();
        let ratio = energy(&low) / energy(&high);
        assert!(ratio < 1e-2, "ratio {ratio}");
    }

    #[test]
    fn noise_reduce_constant_is_zero() {
        let s = spec_from(Array2::from_elem((5, 4), 3.0));
        assert!(noise_reduce(&s).values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn noise_reduce_band_example() {
        let s = spec_from(Array2::from_shape_vec((4, 1), vec![1.0, 1.0, 1.0, 5.0]).unwrap());
        assert_eq!(noise_reduce(&s).values.column(0).to_vec(), [0.0, 0.0, 0.0, 4.0]);
    }

    #[test]
    fn noise_reduce_keeps_only_impulse() {
        let floor: Vec<f64> = (0..40).map(|m| 0.1 + 0.01 * m as f64).collect();
        let mut v = Array2::from_shape_fn((30, 40), |(_, m)| floor[m]);
        for m in 5..15 {
            v[[17, m]] += 2.0;
        }
        let out = noise_reduce(&spec_from(v)).values;
        for t in 0..30 {
            let energy: f64 = out.row(t).sum();
            if t == 17 {
                assert!((energy - 20.0).abs() < 1e-9);
            } else {
                assert_eq!(energy, 0.0);
            }
        }
    }

    #[test]
    fn mfcc_shape_and_deltas() {
        let s = mel_spectrogram(&tone(2500.0, 20_000)).unwrap();
        let f = mfcc_with_deltas(&s);
        assert_eq!(f.dim(), 26);
        assert_eq!(f.frames(), s.frames());
        assert!(f.values.row(0).iter().skip(13).all(|v| *v == 0.0));
    }

    #[test]
    fn time_constant_spectrogram_has_zero_deltas() {
        let row: Vec<f64> = (0..40).map(|m| 1.0 + m as f64).collect();
        let s = spec_from(Array2::from_shape_fn((6, 40), |(_, m)| row[m]));
        let f = mfcc_with_deltas(&s);
        assert!(f.values.slice(ndarray::s![.., 13..]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flat_frame_has_only_c0() {
        let s = spec_from(Array2::from_elem((1, 40), 2.0));
        let f = mfcc_with_deltas(&s);
        assert!(f.values[[0, 0]].abs() > 1.0);
        for k in 1..13 {
            assert!(f.values[[0, k]].abs() < 1e-12);
        }
    }

    fn arb_spec() -> impl Strategy<Value = Array2<f64>> {
        (1usize..12, 1usize..6).prop_flat_map(|(t, m)| {
            proptest::collection::vec(0.0f64..10.0, t * m)
                .prop_map(move |v| Array2::from_shape_vec((t, m), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn noise_reduce_bounded_and_homogeneous(v in arb_spec(), a in 0.01f64..100.0) {
            let s = spec_from(v.clone());
            let out = noise_reduce(&s).values;
            for (o, i) in out.iter().zip(v.iter()) {
                prop_assert!(*o >= 0.0 && *o <= *i);
            }
            let scaled = noise_reduce(&spec_from(v.mapv(|x| a * x))).values;
            for (s, o) in scaled.iter().zip(out.iter()) {
                prop_assert!((s - a * o).abs() <= 1e-9 * (a * o).abs().max(1e-300) + 1e-12);
            }
        }

        #[test]
        fn mfcc_shape_coefficients_scale_invariant(v in arb_spec(), a in 0.1f64..10.0) {
            let v = v.mapv(|x| x + 1.0);
            let base = mfcc_with_deltas(&spec_from(v.clone())).values;
            let scaled = mfcc_with_deltas(&spec_from(v.mapv(|x| a * x))).values;
            for t in 0..base.nrows() {
                for k in 1..13.min(v.ncols()) {
                    prop_assert!((base[[t, k]] - scaled[[t, k]]).abs() < 1e-8);
                }
            }
        }
    }
}
