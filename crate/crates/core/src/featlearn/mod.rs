//! Unsupervised feature learning with online spherical k-means.
//!
//! Learning runs in two streamed passes over the training frames. The first
//! pass reservoir-samples patches, fits a ZCA whitening on the sample and
//! seeds the codebook from distinct sample patches. The second pass streams
//! every patch through the online (Hartigan-style) update, which moves the
//! nearest unit-norm base towards the whitened, unit-normalized patch by
//! `1 / (n + 1)` and renormalizes.

mod reservoir;
mod skmeans;
mod whitening;

pub use reservoir::{reservoir_sample, Reservoir};
pub use skmeans::{
    learn_two_layer, skmeans_learn, Codebook, OnlineSphericalKMeans, SkmParams, TwoLayerModel,
    TwoLayerParams, MIN_TWO_LAYER_FRAMES, NEAR_ZERO_NORM, POOL_FACTOR,
};
pub use whitening::{fit_whitening, WhiteningTransform, DEFAULT_EPSILON};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::series::FeatureSeries;

/// `1 - a·b / (|a| |b|)`, in [0, 2].
pub fn cosine_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            context: "cosine_distance",
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("cosine distance of a zero vector".into()));
    }
    Ok((1.0 - a.dot(&b) / (na * nb)).clamp(0.0, 2.0))
}

/// Row `n` of the output is frames `n..n+p` concatenated.
pub fn stack_frames(series: ArrayView2<'_, f64>, frames_per_patch: usize) -> Result<Array2<f64>> {
    let (t, m) = series.dim();
    if frames_per_patch == 0 {
        return Err(Error::Config("frames_per_patch must be at least 1".into()));
    }
    if t < frames_per_patch {
        return Err(Error::InsufficientSamples(format!(
            "{t} frames cannot hold a {frames_per_patch}-frame patch"
        )));
    }
    let rows = t - frames_per_patch + 1;
    let mut out = Array2::zeros((rows, frames_per_patch * m));
    for n in 0..rows {
        let mut row = out.row_mut(n);
        for d in 0..frames_per_patch {
            row.slice_mut(ndarray::s![d * m..(d + 1) * m])
                .assign(&series.row(n + d));
        }
    }
    Ok(out)
}

/// As [`stack_frames`], but a series shorter than one patch is first padded
/// by repeating its last frame.
pub fn stack_frames_padded(series: ArrayView2<'_, f64>, frames_per_patch: usize) -> Result<Array2<f64>> {
    let t = series.nrows();
    if t == 0 {
        return Err(Error::Empty("series has no frames".into()));
    }
    if t >= frames_per_patch {
        return stack_frames(series, frames_per_patch);
    }
    let last = series.row(t - 1);
    let mut padded = Array2::zeros((frames_per_patch, series.ncols()));
    for r in 0..frames_per_patch {
        padded.row_mut(r).assign(&if r < t { series.row(r) } else { last });
    }
    stack_frames(padded.view(), frames_per_patch)
}

/// Elementwise max over consecutive blocks of `factor` rows; a trailing
/// partial block is pooled as-is.
pub fn max_pool_downsample(series: &FeatureSeries, factor: usize) -> FeatureSeries {
    let factor = factor.max(1);
    let (t, d) = series.values.dim();
    let rows = t.div_ceil(factor);
    let mut out = Array2::from_elem((rows, d), f64::NEG_INFINITY);
    for (i, row) in series.values.axis_iter(Axis(0)).enumerate() {
        let mut dst = out.row_mut(i / factor);
        dst.zip_mut_with(&row, |a, &b| *a = a.max(b));
    }
    FeatureSeries::new(out, series.meaning, series.frame_hop * factor as u32)
}

/// A re-playable stream of frame series. Learning visits the stream twice,
/// so implementations must yield the same series in the same order each time.
pub trait FrameSource {
    fn for_each_series(&self, visit: &mut dyn FnMut(&FeatureSeries) -> Result<()>) -> Result<()>;
}

impl FrameSource for [FeatureSeries] {
    fn for_each_series(&self, visit: &mut dyn FnMut(&FeatureSeries) -> Result<()>) -> Result<()> {
        self.iter().try_for_each(|s| visit(s))
    }
}

impl FrameSource for Vec<FeatureSeries> {
    fn for_each_series(&self, visit: &mut dyn FnMut(&FeatureSeries) -> Result<()>) -> Result<()> {
        self.as_slice().for_each_series(visit)
    }
}

impl<S: FrameSource + ?Sized> FrameSource for &S {
    fn for_each_series(&self, visit: &mut dyn FnMut(&FeatureSeries) -> Result<()>) -> Result<()> {
        (**self).for_each_series(visit)
    }
}

/// Applies `map` to every series of `inner`; `None` drops the series.
pub struct MappedSource<S, F> {
    inner: S,
    map: F,
}

impl<S, F> MappedSource<S, F>
where
    S: FrameSource,
    F: Fn(&FeatureSeries) -> Result<Option<FeatureSeries>>,
{
    pub fn new(inner: S, map: F) -> Self {
        MappedSource { inner, map }
    }
}

impl<S, F> FrameSource for MappedSource<S, F>
where
    S: FrameSource,
    F: Fn(&FeatureSeries) -> Result<Option<FeatureSeries>>,
{
    fn for_each_series(&self, visit: &mut dyn FnMut(&FeatureSeries) -> Result<()>) -> Result<()> {
        self.inner.for_each_series(&mut |s| match (self.map)(s)? {
            Some(mapped) => visit(&mapped),
            None => Ok(()),
        })
    }
}
