use faer::{Mat, Side};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// ZCA whitening `x -> matrix · (x - mean)` with
/// `matrix = V diag(1/sqrt(λ + ε)) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    pub mean: Array1<f64>,
    pub matrix: Array2<f64>,
    pub epsilon: f64,
}

impl WhiteningTransform {
    pub fn identity(dim: usize) -> Self {
        WhiteningTransform {
            mean: Array1::zeros(dim),
            matrix: Array2::eye(dim),
            epsilon: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        self.matrix.dot(&(&x - &self.mean))
    }

    /// Whitens every row of `x`.
    pub fn apply_rows(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let centered = &x - &self.mean.view().insert_axis(Axis(0));
        // the matrix is symmetric, so rows transform by right-multiplication
        centered.dot(&self.matrix)
    }

    /// Inverse transform: `matrix⁻¹ · y + mean`.
    pub fn unapply(&self, y: ArrayView1<'_, f64>) -> Array1<f64> {
        self.inverse_matrix().dot(&y) + &self.mean
    }

    pub fn inverse_matrix(&self) -> Array2<f64> {
        let (vals, vecs) = symmetric_eigen(&self.matrix);
        let inv: Vec<f64> = vals.iter().map(|&v| if v.abs() > 0.0 { 1.0 / v } else { 0.0 }).collect();
        reassemble(&vecs, &inv)
    }
}

fn symmetric_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    let fm = Mat::<f64>::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = fm.selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let vals = (0..n).map(|i| s.read(i)).collect();
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| u.read(i, j));
    (vals, vecs)
}

/// `V diag(scale) Vᵀ`.
fn reassemble(vecs: &Array2<f64>, scale: &[f64]) -> Array2<f64> {
    let mut scaled = vecs.clone();
    for (mut col, &s) in scaled.axis_iter_mut(Axis(1)).zip(scale) {
        col *= s;
    }
    let mut out = scaled.dot(&vecs.t());
    // symmetrize away rounding asymmetry
    let t = out.t().to_owned();
    out = (&out + &t) * 0.5;
    out
}

/// Fits ZCA whitening to the rows of `sample` (N×D). Covariance uses divisor N.
pub fn fit_whitening(sample: ArrayView2<'_, f64>, epsilon: f64) -> Result<WhiteningTransform> {
    let (n, d) = sample.dim();
    if n <= d {
        return Err(Error::InsufficientSamples(format!(
            "whitening {d}-dimensional data needs more than {d} samples, got {n}"
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("whitening epsilon must be non-negative, got {epsilon}")));
    }
    let mean = sample.mean_axis(Axis(0)).expect("n > 0");
    let centered = &sample - &mean.view().insert_axis(Axis(0));
    let cov = centered.t().dot(&centered) / n as f64;
    let (vals, vecs) = symmetric_eigen(&cov);
    let scale: Vec<f64> = vals.iter().map(|&l| 1.0 / (l.max(0.0) + epsilon).sqrt()).collect();
    if scale.iter().any(|s| !s.is_finite()) {
        return Err(Error::Domain(
            "covariance has a zero eigenvalue and epsilon is zero".into(),
        ));
    }
    Ok(WhiteningTransform {
        mean,
        matrix: reassemble(&vecs, &scale),
        epsilon,
    })
}
