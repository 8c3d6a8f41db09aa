use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::reservoir::Reservoir;
use super::whitening::{fit_whitening, WhiteningTransform, DEFAULT_EPSILON};
use super::{max_pool_downsample, stack_frames_padded, FrameSource, MappedSource};
use crate::binio::{check_version, write_atomic, LeReader, LeWriter};
use crate::encode::encode;
use crate::error::{Error, Result};
use crate::series::FeatureSeries;

/// Whitened patches with a smaller norm carry no direction and are skipped.
pub const NEAR_ZERO_NORM: f64 = 1e-12;
pub const POOL_FACTOR: usize = 8;
/// Shortest clip (in frames) that survives 4-frame stacking, 8× pooling and
/// a second 4-frame stacking.
pub const MIN_TWO_LAYER_FRAMES: usize = 4 + POOL_FACTOR * 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkmParams {
    pub k: usize,
    pub frames_per_patch: usize,
    /// Reservoir size for the first pass.
    pub sample_size: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// When false the codebook uses the identity transform instead of ZCA.
    pub whiten: bool,
}

impl Default for SkmParams {
    fn default() -> Self {
        SkmParams {
            k: 500,
            frames_per_patch: 1,
            sample_size: 32_768,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
            whiten: true,
        }
    }
}

impl SkmParams {
    pub fn with_frames(mut self, frames_per_patch: usize) -> Self {
        self.frames_per_patch = frames_per_patch;
        self
    }
}

/// Online spherical k-means state: unit-norm bases and per-base update counts.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSphericalKMeans {
    bases: Array2<f64>,
    counts: Vec<u64>,
}

impl OnlineSphericalKMeans {
    /// Starts from the rows of `initial`, normalized to unit length.
    pub fn new(mut initial: Array2<f64>) -> Result<Self> {
        for (j, mut row) in initial.axis_iter_mut(Axis(0)).enumerate() {
            let norm = row.dot(&row).sqrt();
            if !(norm > NEAR_ZERO_NORM) {
                return Err(Error::Domain(format!("initial base {j} has zero norm")));
            }
            row /= norm;
        }
        let k = initial.nrows();
        Ok(OnlineSphericalKMeans {
            bases: initial,
            counts: vec![0; k],
        })
    }

    /// Index of the base with the smallest cosine distance to `x`, i.e. the
    /// largest dot product for unit bases, and that dot product.
    pub fn nearest(&self, x: ArrayView1<'_, f64>) -> (usize, f64) {
        let dots = self.bases.dot(&x);
        let mut best = (0, f64::NEG_INFINITY);
        for (j, &d) in dots.iter().enumerate() {
            if d > best.1 {
                best = (j, d);
            }
        }
        best
    }

    /// Assigns a unit vector to its nearest base and moves that base towards
    /// it with weight `1 / (n + 1)`, then renormalizes.
    pub fn update(&mut self, x: ArrayView1<'_, f64>) -> usize {
        let (j, _) = self.nearest(x);
        let w = 1.0 / (self.counts[j] as f64 + 1.0);
        let mut row = self.bases.row_mut(j);
        row.zip_mut_with(&x, |c, &xi| *c += w * (xi - *c));
        let norm = row.dot(&row).sqrt();
        if norm > NEAR_ZERO_NORM {
            row /= norm;
        } else {
            row.assign(&x);
        }
        self.counts[j] += 1;
        j
    }

    pub fn bases(&self) -> &Array2<f64> {
        &self.bases
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn into_parts(self) -> (Array2<f64>, Vec<u64>) {
        (self.bases, self.counts)
    }
}

/// Learned unit-norm bases plus the whitening that maps stacked input frames
/// into the space the bases live in.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    bases: Array2<f64>,
    counts: Vec<u64>,
    frames_per_patch: usize,
    whitening: WhiteningTransform,
    layer_index: u32,
    // bases · W and (bases · W) · mean, so encoding is a single product
    projection: Array2<f64>,
    offset: Array1<f64>,
}

const CODEBOOK_MAGIC: &[u8; 4] = b"BSCB";
const CODEBOOK_VERSION: u32 = 1;
const TWO_LAYER_MAGIC: &[u8; 4] = b"BSTL";
const TWO_LAYER_VERSION: u32 = 1;

impl Codebook {
    pub fn new(
        bases: Array2<f64>,
        counts: Vec<u64>,
        frames_per_patch: usize,
        whitening: WhiteningTransform,
        layer_index: u32,
    ) -> Result<Self> {
        let (k, d) = bases.dim();
        if counts.len() != k {
            return Err(Error::Dimension {
                context: "codebook counts",
                expected: k,
                got: counts.len(),
            });
        }
        if whitening.dim() != d || whitening.matrix.dim() != (d, d) {
            return Err(Error::Dimension {
                context: "codebook whitening",
                expected: d,
                got: whitening.dim(),
            });
        }
        if frames_per_patch == 0 || d % frames_per_patch != 0 {
            return Err(Error::Config(format!(
                "base dimension {d} is not a multiple of frames_per_patch {frames_per_patch}"
            )));
        }
        let projection = bases.dot(&whitening.matrix);
        let offset = projection.dot(&whitening.mean);
        Ok(Codebook {
            bases,
            counts,
            frames_per_patch,
            whitening,
            layer_index,
            projection,
            offset,
        })
    }

    pub fn k(&self) -> usize {
        self.bases.nrows()
    }

    /// Dimension of a stacked patch.
    pub fn dim(&self) -> usize {
        self.bases.ncols()
    }

    /// Dimension of a single input frame.
    pub fn frame_dim(&self) -> usize {
        self.dim() / self.frames_per_patch
    }

    pub fn bases(&self) -> &Array2<f64> {
        &self.bases
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn frames_per_patch(&self) -> usize {
        self.frames_per_patch
    }

    pub fn whitening(&self) -> &WhiteningTransform {
        &self.whitening
    }

    pub fn layer_index(&self) -> u32 {
        self.layer_index
    }

    /// Dot products of whitened stacked rows with every base.
    pub fn project_rows(&self, stacked: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = stacked.dot(&self.projection.t());
        out -= &self.offset.view().insert_axis(Axis(0));
        out
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = LeWriter::new(w);
        w.bytes(CODEBOOK_MAGIC)?;
        w.u32(CODEBOOK_VERSION)?;
        w.u32(self.k() as u32)?;
        w.u32(self.dim() as u32)?;
        w.u32(self.frames_per_patch as u32)?;
        w.u32(self.layer_index)?;
        w.f64(self.whitening.epsilon)?;
        w.f64s(self.whitening.mean.iter().copied())?;
        w.f64s(self.whitening.matrix.iter().copied())?;
        w.f64s(self.bases.iter().copied())?;
        for &c in &self.counts {
            w.u64(c)?;
        }
        Ok(())
    }

    fn read_body<R: Read>(r: &mut LeReader<R>) -> Result<Self> {
        r.magic(CODEBOOK_MAGIC)?;
        check_version(r.u32()?, CODEBOOK_VERSION, "codebook")?;
        let k = r.u32()? as usize;
        let d = r.u32()? as usize;
        let p = r.u32()? as usize;
        let layer = r.u32()?;
        let epsilon = r.f64()?;
        let mean = Array1::from(r.f64s(d)?);
        let matrix = Array2::from_shape_vec((d, d), r.f64s(d * d)?).map_err(|e| Error::Format(e.to_string()))?;
        let bases = Array2::from_shape_vec((k, d), r.f64s(k * d)?).map_err(|e| Error::Format(e.to_string()))?;
        let counts = (0..k).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        Codebook::new(bases, counts, p, WhiteningTransform { mean, matrix, epsilon }, layer)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = LeReader::new(r);
        let cb = Self::read_body(&mut r)?;
        r.expect_eof()?;
        Ok(cb)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::read(path)?.as_slice())
    }
}

fn check_patch_dim(expected: &mut Option<usize>, got: usize) -> Result<()> {
    match *expected {
        None => {
            *expected = Some(got);
            Ok(())
        }
        Some(e) if e == got => Ok(()),
        Some(e) => Err(Error::Dimension {
            context: "feature-learning stream",
            expected: e,
            got,
        }),
    }
}

/// Two-pass online spherical k-means over `source`.
pub fn skmeans_learn(source: &dyn FrameSource, params: &SkmParams, layer_index: u32) -> Result<Codebook> {
    if params.k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if params.sample_size < params.k {
        return Err(Error::Config(format!(
            "sample size {} is smaller than k = {}",
            params.sample_size, params.k
        )));
    }
    let p = params.frames_per_patch;

    // Pass 1: reservoir sample, whitening, seeding.
    let mut reservoir = Reservoir::new(params.sample_size, params.seed);
    let mut patch_dim = None;
    source.for_each_series(&mut |series| {
        if series.frames() == 0 {
            return Ok(());
        }
        let stacked = stack_frames_padded(series.values.view(), p)?;
        check_patch_dim(&mut patch_dim, stacked.ncols())?;
        for row in stacked.axis_iter(Axis(0)) {
            reservoir.offer(row.to_vec());
        }
        Ok(())
    })?;
    let d = patch_dim.ok_or_else(|| Error::Empty("feature-learning stream has no frames".into()))?;
    let sample_rows = reservoir.finish()?;
    let n = sample_rows.len();
    let sample = Array2::from_shape_vec((n, d), sample_rows.into_iter().flatten().collect())
        .expect("rows share the patch dimension");

    let whitening = if params.whiten {
        fit_whitening(sample.view(), params.epsilon)?
    } else {
        WhiteningTransform::identity(d)
    };
    let white = whitening.apply_rows(sample.view());

    let mut seeds = Array2::zeros((params.k, d));
    let mut distinct: HashSet<Vec<u64>> = HashSet::new();
    let mut filled = 0;
    for row in white.axis_iter(Axis(0)) {
        if filled == params.k {
            break;
        }
        let norm = row.dot(&row).sqrt();
        if norm < NEAR_ZERO_NORM {
            continue;
        }
        let unit = &row / norm;
        if distinct.insert(unit.iter().map(|v| v.to_bits()).collect()) {
            seeds.row_mut(filled).assign(&unit);
            filled += 1;
        }
    }
    if filled < params.k {
        return Err(Error::InsufficientSamples(format!(
            "only {filled} distinct patches available to seed k = {} bases",
            params.k
        )));
    }

    // Pass 2: stream every patch through the online update.
    let mut km = OnlineSphericalKMeans::new(seeds)?;
    source.for_each_series(&mut |series| {
        if series.frames() == 0 {
            return Ok(());
        }
        let stacked = stack_frames_padded(series.values.view(), p)?;
        check_patch_dim(&mut patch_dim, stacked.ncols())?;
        let white = whitening.apply_rows(stacked.view());
        for row in white.axis_iter(Axis(0)) {
            let norm = row.dot(&row).sqrt();
            if norm < NEAR_ZERO_NORM {
                continue;
            }
            km.update((&row / norm).view());
        }
        Ok(())
    })?;

    let (bases, counts) = km.into_parts();
    Codebook::new(bases, counts, p, whitening, layer_index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoLayerParams {
    pub layer1: SkmParams,
    pub layer2: SkmParams,
    pub pool_factor: usize,
}

impl TwoLayerParams {
    /// Both layers on 4-frame patches, pooling by 8.
    pub fn from_base(base: &SkmParams) -> Self {
        let layer1 = SkmParams {
            frames_per_patch: 4,
            ..base.clone()
        };
        let layer2 = SkmParams {
            seed: base.seed.wrapping_add(1),
            ..layer1.clone()
        };
        TwoLayerParams {
            layer1,
            layer2,
            pool_factor: POOL_FACTOR,
        }
    }

    /// Fewest input frames a clip needs to reach the second layer.
    pub fn min_frames(&self) -> usize {
        self.layer1.frames_per_patch + self.pool_factor * (self.layer2.frames_per_patch - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerModel {
    pub layer1: Codebook,
    pub pool_factor: usize,
    pub layer2: Codebook,
}

impl TwoLayerModel {
    pub fn new(layer1: Codebook, pool_factor: usize, layer2: Codebook) -> Result<Self> {
        let expected = layer1.k() * layer2.frames_per_patch();
        if layer2.dim() != expected {
            return Err(Error::Dimension {
                context: "two-layer model",
                expected,
                got: layer2.dim(),
            });
        }
        Ok(TwoLayerModel {
            layer1,
            pool_factor,
            layer2,
        })
    }

    pub fn min_frames(&self) -> usize {
        self.layer1.frames_per_patch() + self.pool_factor * (self.layer2.frames_per_patch() - 1)
    }

    /// Layer-1 encoding followed by max-pooling: the input of layer 2.
    pub fn pooled_layer1(&self, series: &FeatureSeries) -> Result<FeatureSeries> {
        Ok(max_pool_downsample(&encode(&self.layer1, series)?, self.pool_factor))
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut lw = LeWriter::new(w);
        lw.bytes(TWO_LAYER_MAGIC)?;
        lw.u32(TWO_LAYER_VERSION)?;
        lw.u32(self.pool_factor as u32)?;
        let mut w = lw.into_inner();
        self.layer1.write_to(&mut w)?;
        self.layer2.write_to(&mut w)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = LeReader::new(r);
        r.magic(TWO_LAYER_MAGIC)?;
        check_version(r.u32()?, TWO_LAYER_VERSION, "two-layer model")?;
        let pool = r.u32()? as usize;
        let l1 = Codebook::read_body(&mut r)?;
        let l2 = Codebook::read_body(&mut r)?;
        r.expect_eof()?;
        TwoLayerModel::new(l1, pool, l2)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::read(path)?.as_slice())
    }
}

/// Learns layer 1 on 4-frame patches, re-encodes and max-pools the stream,
/// then learns layer 2 (with its own whitening) on the pooled stream.
/// Clips shorter than [`TwoLayerParams::min_frames`] are left out.
pub fn learn_two_layer(source: &dyn FrameSource, params: &TwoLayerParams) -> Result<TwoLayerModel> {
    let min_frames = params.min_frames();
    let long_enough = MappedSource::new(source, move |s: &FeatureSeries| {
        Ok((s.frames() >= min_frames).then(|| s.clone()))
    });
    let layer1 = skmeans_learn(&long_enough, &params.layer1, 1)?;
    let pooled = MappedSource::new(source, |s: &FeatureSeries| {
        if s.frames() < min_frames {
            return Ok(None);
        }
        Ok(Some(max_pool_downsample(&encode(&layer1, s)?, params.pool_factor)))
    });
    let layer2 = skmeans_learn(&pooled, &params.layer2, 2)?;
    TwoLayerModel::new(layer1, params.pool_factor, layer2)
}
