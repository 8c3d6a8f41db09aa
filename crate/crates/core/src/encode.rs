//! Projection of feature series onto learned bases, and the fixed-size
//! random projection used to equalize feature dimensionality.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::featlearn::{max_pool_downsample, stack_frames_padded, Codebook, TwoLayerModel};
use crate::series::{DimMeaning, FeatureSeries};

pub const RANDOM_PROJECTION_DIM: usize = 200;

/// Stacks `frames_per_patch` frames, whitens each stacked row and takes its
/// dot product with every base. No nonlinearity is applied. Series shorter
/// than one patch are padded by repeating the last frame.
pub fn encode(codebook: &Codebook, series: &FeatureSeries) -> Result<FeatureSeries> {
    if series.dim() != codebook.frame_dim() {
        return Err(Error::Dimension {
            context: "encode",
            expected: codebook.frame_dim(),
            got: series.dim(),
        });
    }
    let stacked = stack_frames_padded(series.values.view(), codebook.frames_per_patch())?;
    Ok(FeatureSeries::new(
        codebook.project_rows(stacked.view()),
        DimMeaning::Encoded,
        series.frame_hop,
    ))
}

/// Layer-1 encoding, max-pooling, layer-2 encoding. Clips shorter than the
/// composed receptive field are an error rather than being padded.
pub fn encode_two_layer(model: &TwoLayerModel, series: &FeatureSeries) -> Result<FeatureSeries> {
    let need = model.min_frames();
    if series.frames() < need {
        return Err(Error::InsufficientSamples(format!(
            "two-layer encoding needs at least {need} frames, clip has {}",
            series.frames()
        )));
    }
    let pooled = max_pool_downsample(&encode(&model.layer1, series)?, model.pool_factor);
    encode(&model.layer2, &pooled)
}

/// Seeded Gaussian projection to [`RANDOM_PROJECTION_DIM`] columns with
/// entries drawn i.i.d. from N(0, 1/200).
#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    pub matrix: Array2<f64>,
    pub seed: u64,
}

impl RandomProjection {
    pub fn new(input_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Normal::new(0.0, (1.0 / RANDOM_PROJECTION_DIM as f64).sqrt()).expect("valid sd");
        let matrix = Array2::from_shape_simple_fn((input_dim, RANDOM_PROJECTION_DIM), || dist.sample(&mut rng));
        RandomProjection { matrix, seed }
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn project(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.input_dim() {
            return Err(Error::Dimension {
                context: "random projection",
                expected: self.input_dim(),
                got: features.ncols(),
            });
        }
        Ok(features.dot(&self.matrix))
    }
}

pub fn random_project(features: ArrayView2<'_, f64>, seed: u64) -> Result<Array2<f64>> {
    if features.ncols() == 0 {
        return Err(Error::Config("random projection needs at least one input dimension".into()));
    }
    RandomProjection::new(features.ncols(), seed).project(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featlearn::WhiteningTransform;
    use ndarray::{Array1, Axis};
    use rand::Rng;

    fn identity_codebook(bases: Array2<f64>, p: usize) -> Codebook {
        let d = bases.ncols();
        let k = bases.nrows();
        Codebook::new(bases, vec![0; k], p, WhiteningTransform::identity(d), 1).unwrap()
    }

    fn random_series(t: usize, m: usize, seed: u64) -> FeatureSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureSeries::new(Array2::from_shape_simple_fn((t, m), || rng.gen_range(-1.0..1.0)), DimMeaning::Mel, 1024)
    }

    #[test]
    fn dot_with_unit_axis() {
        let mut bases = Array2::zeros((2, 4));
        bases[[0, 0]] = 1.0;
        bases[[1, 1]] = 1.0;
        let cb = identity_codebook(bases, 1);
        let x = FeatureSeries::new(Array2::from_shape_vec((1, 4), vec![3.0, 0.0, 0.0, 0.0]).unwrap(), DimMeaning::Mel, 1024);
        let e = encode(&cb, &x).unwrap();
        assert_eq!(e.values[[0, 0]], 3.0);
        assert_eq!(e.values[[0, 1]], 0.0);
    }

    #[test]
    fn single_frame_identity_whitening_is_matrix_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bases = Array2::from_shape_simple_fn((7, 5), || rng.gen_range(-1.0..1.0));
        let cb = identity_codebook(bases.clone(), 1);
        let s = random_series(9, 5, 2);
        let e = encode(&cb, &s).unwrap();
        let direct = s.values.dot(&bases.t());
        assert!((&e.values - &direct).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_in_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bases = Array2::from_shape_simple_fn((6, 12), || rng.gen_range(-1.0..1.0));
        let cb = identity_codebook(bases, 3);
        let x = random_series(10, 4, 4);
        let y = random_series(10, 4, 5);
        let sum = FeatureSeries::new(&x.values + &y.values, DimMeaning::Mel, 1024);
        let lhs = encode(&cb, &sum).unwrap().values;
        let rhs = encode(&cb, &x).unwrap().values + encode(&cb, &y).unwrap().values;
        assert!((&lhs - &rhs).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn output_row_depends_only_on_its_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bases = Array2::from_shape_simple_fn((5, 8), || rng.gen_range(-1.0..1.0));
        let mean = Array1::from_shape_simple_fn(8, || rng.gen_range(-1.0..1.0));
        let whitening = WhiteningTransform { mean, matrix: Array2::eye(8) * 2.0, epsilon: 0.0 };
        let cb = Codebook::new(bases, vec![0; 5], 4, whitening, 1).unwrap();
        let s = random_series(20, 2, 7);
        let base = encode(&cb, &s).unwrap().values;
        assert_eq!(base.dim(), (17, 5));
        let mut perturbed = s.clone();
        perturbed.values[[15, 0]] += 10.0;
        let changed = encode(&cb, &perturbed).unwrap().values;
        for n in 0..17 {
            let same = base.row(n) == changed.row(n);
            assert_eq!(same, !(12..=15).contains(&n), "row {n}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let cb = identity_codebook(Array2::eye(4), 2);
        assert!(matches!(encode(&cb, &random_series(5, 3, 1)), Err(Error::Dimension { .. })));
    }

    #[test]
    fn two_layer_lengths() {
        let l1 = identity_codebook(Array2::from_shape_fn((3, 8), |(i, j)| (i + j) as f64 + 1.0), 4);
        let l2 = identity_codebook(Array2::from_shape_fn((5, 12), |(i, j)| (i * j) as f64 + 1.0), 4);
        let model = TwoLayerModel::new(l1, 8, l2).unwrap();
        let out = encode_two_layer(&model, &random_series(36, 2, 1)).unwrap();
        // 36 -> 33 stacked -> 5 pooled -> 2 stacked
        assert_eq!(out.dim(), 5);
        assert_eq!(out.frames(), 2);
        assert_eq!(out.frame_hop, 8 * 1024);
        assert!(encode_two_layer(&model, &random_series(27, 2, 1)).is_err());
        assert!(encode_two_layer(&model, &random_series(28, 2, 1)).is_ok());
        let zeros = FeatureSeries::new(Array2::zeros((40, 2)), DimMeaning::Mel, 1024);
        assert!(encode_two_layer(&model, &zeros).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn projection_widths_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let small = Array2::from_shape_simple_fn((4, 52), || rng.gen_range(-1.0..1.0));
        let big = Array2::from_shape_simple_fn((4, 1000), || rng.gen_range(-1.0..1.0));
        assert_eq!(random_project(small.view(), 1).unwrap().ncols(), 200);
        assert_eq!(random_project(big.view(), 1).unwrap().ncols(), 200);
        let a = random_project(big.view(), 99).unwrap();
        let b = random_project(big.view(), 99).unwrap();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn projection_entries_have_expected_variance() {
        let rp = RandomProjection::new(500, 4);
        let n = rp.matrix.len() as f64;
        let mean = rp.matrix.sum() / n;
        let var = rp.matrix.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-3);
        assert!((var * 200.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn pairwise_distances_within_jl_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = Array2::from_shape_simple_fn((100, 1000), || rng.gen_range(-1.0..1.0));
        let y = random_project(x.view(), 11).unwrap();
        let dist = |m: &Array2<f64>, i: usize, j: usize| {
            let d = &m.index_axis(Axis(0), i) - &m.index_axis(Axis(0), j);
            d.dot(&d).sqrt()
        };
        let mut distortions = Vec::new();
        for i in 0..100 {
            for j in i + 1..100 {
                let (a, b) = (dist(&x, i, j), dist(&y, i, j));
                distortions.push((b - a).abs() / a);
            }
        }
        distortions.sort_by(f64::total_cmp);
        let median = distortions[distortions.len() / 2];
        assert!(median < 0.25, "median distortion {median}");
    }
}
