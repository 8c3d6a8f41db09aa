//! Temporal summarization of feature series into fixed-length vectors, per
//! decision window.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dataset::STANDARD_SAMPLE_RATE;
use crate::error::{Error, Result};
use crate::series::{DimMeaning, FeatureSeries};
use crate::spectral::{MEL_BANDS, MFCC_DIM};

pub const MODULATION_BANDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Mfcc,
    Mel,
    /// Single-layer learned features over `frames`-frame patches.
    Learned { frames: usize },
    /// 4-frame learned features, pooled by 8, then 4-frame learned again.
    TwoLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Summarisation {
    MeanStd,
    Max,
    Modulation,
}

impl Summarisation {
    pub fn width(self, dim: usize) -> usize {
        match self {
            Summarisation::MeanStd => 2 * dim,
            Summarisation::Max => dim,
            Summarisation::Modulation => MODULATION_BANDS * dim,
        }
    }

    fn min_frames(self) -> usize {
        match self {
            Summarisation::Modulation => 2,
            _ => 1,
        }
    }
}

/// One of the twelve feature/summarization combinations, e.g. `mfcc-ms`
/// or `melspec-kfl4pl8kfl4-ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub summary: Summarisation,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 12] = [
        FeatureConfig::new(FeatureKind::Mfcc, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::Mfcc, Summarisation::Max),
        FeatureConfig::new(FeatureKind::Mfcc, Summarisation::Modulation),
        FeatureConfig::new(FeatureKind::Mel, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::Mel, Summarisation::Max),
        FeatureConfig::new(FeatureKind::Mel, Summarisation::Modulation),
        FeatureConfig::new(FeatureKind::Learned { frames: 1 }, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::Learned { frames: 2 }, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::Learned { frames: 3 }, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::Learned { frames: 4 }, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::Learned { frames: 8 }, Summarisation::MeanStd),
        FeatureConfig::new(FeatureKind::TwoLayer, Summarisation::MeanStd),
    ];

    pub const fn new(kind: FeatureKind, summary: Summarisation) -> Self {
        FeatureConfig { kind, summary }
    }

    pub fn is_learned(&self) -> bool {
        matches!(self.kind, FeatureKind::Learned { .. } | FeatureKind::TwoLayer)
    }

    /// Learned features only take mean+std summaries; learned patch widths
    /// are limited to 1, 2, 3, 4 or 8 frames.
    pub fn validate(&self) -> Result<()> {
        if self.is_learned() && self.summary != Summarisation::MeanStd {
            return Err(Error::Config(format!(
                "learned features only support mean+std summarization, got `{self}`"
            )));
        }
        if let FeatureKind::Learned { frames } = self.kind {
            if ![1, 2, 3, 4, 8].contains(&frames) {
                return Err(Error::Config(format!("unsupported patch width {frames}")));
            }
        }
        Ok(())
    }

    /// Per-frame width of the series before summarization.
    pub fn series_dim(&self, k: usize) -> usize {
        match self.kind {
            FeatureKind::Mfcc => MFCC_DIM,
            FeatureKind::Mel => MEL_BANDS,
            FeatureKind::Learned { .. } | FeatureKind::TwoLayer => k,
        }
    }

    /// Width of the summary vector given `k` learned bases.
    pub fn summary_dim(&self, k: usize) -> usize {
        self.summary.width(self.series_dim(k))
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let feat = match self.kind {
            FeatureKind::Mfcc => "mfcc".to_string(),
            FeatureKind::Mel => "melspec".to_string(),
            FeatureKind::Learned { frames } => format!("melspec-kfl{frames}"),
            FeatureKind::TwoLayer => "melspec-kfl4pl8kfl4".to_string(),
        };
        let summ = match self.summary {
            Summarisation::MeanStd => "ms",
            Summarisation::Max => "maxp",
            Summarisation::Modulation => "modul",
        };
        write!(f, "{feat}-{summ}")
    }
}

impl FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (feat, summ) = s
            .rsplit_once('-')
            .ok_or_else(|| Error::Config(format!("unknown feature config `{s}`")))?;
        let summary = match summ {
            "ms" => Summarisation::MeanStd,
            "maxp" => Summarisation::Max,
            "modul" => Summarisation::Modulation,
            _ => return Err(Error::Config(format!("unknown summarization in `{s}`"))),
        };
        let kind = match feat {
            "mfcc" => FeatureKind::Mfcc,
            "melspec" => FeatureKind::Mel,
            "melspec-kfl4pl8kfl4" => FeatureKind::TwoLayer,
            other => match other.strip_prefix("melspec-kfl").and_then(|n| n.parse().ok()) {
                Some(frames) => FeatureKind::Learned { frames },
                None => return Err(Error::Config(format!("unknown feature type in `{s}`"))),
            },
        };
        let cfg = FeatureConfig { kind, summary };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl TryFrom<String> for FeatureConfig {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureConfig> for String {
    fn from(c: FeatureConfig) -> String {
        c.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DecisionWindow {
    Seconds(u32),
    Whole,
}

impl DecisionWindow {
    pub const STANDARD: [DecisionWindow; 4] = [
        DecisionWindow::Seconds(1),
        DecisionWindow::Seconds(5),
        DecisionWindow::Seconds(60),
        DecisionWindow::Whole,
    ];

    /// Frames per window for a series with the given hop.
    pub fn frames(&self, frame_hop: u32) -> Option<usize> {
        match *self {
            DecisionWindow::Whole => None,
            DecisionWindow::Seconds(s) => {
                Some(((s as u64 * STANDARD_SAMPLE_RATE as u64) / frame_hop.max(1) as u64).max(1) as usize)
            }
        }
    }
}

impl fmt::Display for DecisionWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionWindow::Seconds(s) => write!(f, "{s}"),
            DecisionWindow::Whole => write!(f, "whole"),
        }
    }
}

impl FromStr for DecisionWindow {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "whole" {
            return Ok(DecisionWindow::Whole);
        }
        match s.trim_end_matches('s').parse::<u32>() {
            Ok(n) if n > 0 => Ok(DecisionWindow::Seconds(n)),
            _ => Err(Error::Config(format!("bad decision window `{s}`"))),
        }
    }
}

impl TryFrom<String> for DecisionWindow {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DecisionWindow> for String {
    fn from(w: DecisionWindow) -> String {
        w.to_string()
    }
}

/// Frame ranges `[start, end)` of the contiguous windows.
pub fn window_ranges(frames: usize, frame_hop: u32, window: DecisionWindow) -> Vec<(usize, usize)> {
    match window.frames(frame_hop) {
        None => vec![(0, frames)],
        Some(len) => (0..frames)
            .step_by(len)
            .map(|start| (start, (start + len).min(frames)))
            .collect(),
    }
}

/// Non-overlapping windows; a final partial window is kept.
pub fn split_windows(series: &FeatureSeries, window: DecisionWindow) -> Vec<FeatureSeries> {
    window_ranges(series.frames(), series.frame_hop, window)
        .into_iter()
        .map(|(a, b)| series.slice_frames(a, b))
        .collect()
}

/// Per-dimension mean followed by per-dimension population std.
pub fn mean_std(series: &Array2<f64>) -> Array1<f64> {
    let (t, d) = series.dim();
    let mut out = Array1::zeros(2 * d);
    if t == 0 {
        return out;
    }
    for (j, col) in series.axis_iter(Axis(1)).enumerate() {
        let mean = col.sum() / t as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64;
        out[j] = mean;
        out[d + j] = var.sqrt();
    }
    out
}

pub fn max_summary(series: &Array2<f64>) -> Array1<f64> {
    series.fold_axis(Axis(0), f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// Per dimension: remove the temporal mean, zero-pad to a power of two,
/// take the magnitude spectrum up to Nyquist and average it into 10
/// contiguous equal-width bands. Output is dimension-major.
pub fn modulation_summary(series: &Array2<f64>) -> Result<Array1<f64>> {
    let (t, d) = series.dim();
    if t < 2 {
        return Err(Error::InsufficientSamples(format!(
            "modulation summary needs at least 2 frames, got {t}"
        )));
    }
    let n = t.next_power_of_two();
    let bins = n / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut out = Array1::zeros(MODULATION_BANDS * d);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for (j, col) in series.axis_iter(Axis(1)).enumerate() {
        let mean = col.sum() / t as f64;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(if i < t { col[i] - mean } else { 0.0 }, 0.0);
        }
        fft.process(&mut buf);
        let mags: Vec<f64> = buf[..bins].iter().map(|c| c.norm()).collect();
        for (b, v) in band_average(&mags, MODULATION_BANDS).into_iter().enumerate() {
            out[j * MODULATION_BANDS + b] = v;
        }
    }
    Ok(out)
}

/// Averages `values` into `bands` equal-width bands. Bin `i` occupies
/// `[i, i+1)`; bins straddling a band edge contribute by overlap.
fn band_average(values: &[f64], bands: usize) -> Vec<f64> {
    let n = values.len() as f64;
    let width = n / bands as f64;
    (0..bands)
        .map(|b| {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            let mut acc = 0.0;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(values.len());
            for (i, v) in values.iter().enumerate().take(last).skip(first) {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                acc += overlap * v;
            }
            acc / width
        })
        .collect()
}

pub fn summarize(series: &Array2<f64>, how: Summarisation) -> Result<Array1<f64>> {
    if series.nrows() == 0 {
        return Err(Error::Empty("cannot summarize an empty series".into()));
    }
    match how {
        Summarisation::MeanStd => Ok(mean_std(series)),
        Summarisation::Max => Ok(max_summary(series)),
        Summarisation::Modulation => modulation_summary(series),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector {
    pub values: Array1<f64>,
    pub config_label: String,
    pub clip_id: String,
    pub window_index: usize,
    /// Start and end in seconds.
    pub window_span: (f64, f64),
}

/// Splits `series` into decision windows and summarizes each one. A
/// trailing window too short for the summarizer is merged into the one
/// before it.
pub fn summarize_clip(
    clip_id: &str,
    series: &FeatureSeries,
    config: FeatureConfig,
    window: DecisionWindow,
) -> Result<Vec<SummaryVector>> {
    let need = config.summary.min_frames();
    if series.frames() < need {
        return Err(Error::InsufficientSamples(format!(
            "clip `{clip_id}` has {} frame(s), `{config}` needs {need}",
            series.frames()
        )));
    }
    let mut ranges = window_ranges(series.frames(), series.frame_hop, window);
    if ranges.len() > 1 {
        let (a, b) = ranges[ranges.len() - 1];
        if b - a < need {
            ranges.pop();
            ranges.last_mut().expect("at least one range remains").1 = b;
        }
    }
    let hop = series.frame_hop as f64 / STANDARD_SAMPLE_RATE as f64;
    let label = config.label();
    ranges
        .into_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let values = summarize(&series.values.slice(ndarray::s![a..b, ..]).to_owned(), config.summary)?;
            Ok(SummaryVector {
                values,
                config_label: label.clone(),
                clip_id: clip_id.to_string(),
                window_index: i,
                window_span: (a as f64 * hop, b as f64 * hop),
            })
        })
        .collect()
}

/// Summary vectors persisted as a feature-cache matrix (one row per vector)
/// plus an `index.csv` keyed by `(clip_id, window_index, config_label)`.
pub fn save_summaries(dir: &Path, rows: &[SummaryVector]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let d = rows.first().map_or(0, |r| r.values.len());
    let mut m = Array2::zeros((rows.len(), d));
    for (i, r) in rows.iter().enumerate() {
        if r.values.len() != d {
            return Err(Error::Dimension {
                context: "summary table",
                expected: d,
                got: r.values.len(),
            });
        }
        m.row_mut(i).assign(&r.values);
    }
    FeatureSeries::new(m, DimMeaning::Summary, 0).save(&dir.join("summaries.bsfc"))?;
    let mut w = csv::Writer::from_path(dir.join("index.csv"))?;
    w.write_record(["clip_id", "window_index", "config_label", "start_s", "end_s"])?;
    for r in rows {
        w.write_record([
            r.clip_id.clone(),
            r.window_index.to_string(),
            r.config_label.clone(),
            r.window_span.0.to_string(),
            r.window_span.1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_summaries(dir: &Path) -> Result<Vec<SummaryVector>> {
    let m = FeatureSeries::load(&dir.join("summaries.bsfc"))?;
    let mut rdr = csv::Reader::from_path(dir.join("index.csv"))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Format(format!("index.csv row {}: bad {what}", i + 2));
        if i >= m.frames() {
            return Err(Error::Format("index.csv has more rows than the summary matrix".into()));
        }
        out.push(SummaryVector {
            values: m.values.row(i).to_owned(),
            clip_id: rec.get(0).ok_or_else(|| bad("clip_id"))?.to_string(),
            window_index: rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("window_index"))?,
            config_label: rec.get(2).ok_or_else(|| bad("config_label"))?.to_string(),
            window_span: (
                rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("start_s"))?,
                rec.get(4).and_then(|s| s.parse().ok()).ok_or_else(|| bad("end_s"))?,
            ),
        });
    }
    if out.len() != m.frames() {
        return Err(Error::Format("index.csv has fewer rows than the summary matrix".into()));
    }
    Ok(out)
}
