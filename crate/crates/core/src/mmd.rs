//! Multi-bandwidth Gaussian-kernel maximum mean discrepancy.
//!
//! The kernel is `k(u, v) = sum_k w_k exp(-|u - v|^2 / (2 sigma_k^2))` and the
//! estimator is the biased V-statistic
//! `mean(K_xx) + mean(K_yy) - 2 mean(K_xy)`, which is never negative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{squared_distance, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub bandwidths: Vec<f64>,
    /// Per-bandwidth mixture weights. Empty means all ones.
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::with_bandwidths(&[1.0, 2.0, 4.0, 8.0, 16.0])
    }
}

impl KernelSpec {
    pub fn with_bandwidths(bandwidths: &[f64]) -> Self {
        KernelSpec {
            bandwidths: bandwidths.to_vec(),
            weights: vec![1.0; bandwidths.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidths.is_empty() {
            return Err(Error::Param("kernel needs at least one bandwidth".into()));
        }
        if let Some(s) = self.bandwidths.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::Param(format!("kernel bandwidth {s} must be positive")));
        }
        if !self.weights.is_empty() {
            if self.weights.len() != self.bandwidths.len() {
                return Err(Error::Param(format!(
                    "{} kernel weights for {} bandwidths",
                    self.weights.len(),
                    self.bandwidths.len()
                )));
            }
            if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                return Err(Error::Param(format!("kernel weight {w} must be positive")));
            }
        }
        Ok(())
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bandwidths.iter().enumerate().map(move |(i, &s)| {
            let w = self.weights.get(i).copied().unwrap_or(1.0);
            (w, 1.0 / (2.0 * s * s))
        })
    }

    /// Kernel value at squared distance `d2`.
    pub fn eval(&self, d2: f64) -> f64 {
        self.terms().map(|(w, c)| w * (-c * d2).exp()).sum()
    }

    /// `dk/d(d2)` at squared distance `d2`.
    fn eval_deriv(&self, d2: f64) -> f64 {
        self.terms().map(|(w, c)| -w * c * (-c * d2).exp()).sum()
    }
}

fn check(x: &Matrix, y: &Matrix, kernel: &KernelSpec) -> Result<()> {
    kernel.validate()?;
    if x.cols() != y.cols() {
        return Err(Error::shape("mmd", x.shape(), y.shape()));
    }
    Ok(())
}

fn check_nonempty(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.rows() == 0 || y.rows() == 0 {
        return Err(Error::Data(format!(
            "mmd needs non-empty samples, got {} and {} rows",
            x.rows(),
            y.rows()
        )));
    }
    Ok(())
}

/// Kernel matrix between the rows of `x` and `y`.
pub fn gram(x: &Matrix, y: &Matrix, kernel: &KernelSpec) -> Result<Matrix> {
    check(x, y, kernel)?;
    let mut out = Matrix::zeros(x.rows(), y.rows());
    for i in 0..x.rows() {
        for j in 0..y.rows() {
            out[(i, j)] = kernel.eval(squared_distance(x.row(i), y.row(j)));
        }
    }
    Ok(out)
}

/// Sum of kernel values over all pairs of rows within `x`, using symmetry.
fn self_sum(x: &Matrix, kernel: &KernelSpec) -> f64 {
    let n = x.rows();
    let mut off = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            off += kernel.eval(squared_distance(x.row(i), x.row(j)));
        }
    }
    2.0 * off + n as f64 * kernel.eval(0.0)
}

fn cross_sum(x: &Matrix, y: &Matrix, kernel: &KernelSpec) -> f64 {
    let mut total = 0.0;
    for i in 0..x.rows() {
        for j in 0..y.rows() {
            total += kernel.eval(squared_distance(x.row(i), y.row(j)));
        }
    }
    total
}

/// Biased squared MMD between the row samples `x` and `y`.
pub fn mmd2_biased(x: &Matrix, y: &Matrix, kernel: &KernelSpec) -> Result<f64> {
    check(x, y, kernel)?;
    check_nonempty(x, y)?;
    let n = x.rows() as f64;
    let m = y.rows() as f64;
    let value = self_sum(x, kernel) / (n * n) + self_sum(y, kernel) / (m * m) - 2.0 * cross_sum(x, y, kernel) / (n * m);
    // rounding can push an exact zero slightly negative
    Ok(value.max(0.0))
}

/// Gradient of [`mmd2_biased`] with respect to each row of `x_generated`,
/// holding `y_real` fixed.
pub fn mmd2_gradient(x_generated: &Matrix, y_real: &Matrix, kernel: &KernelSpec) -> Result<Matrix> {
    Ok(mmd2_with_gradient(x_generated, y_real, kernel)?.1)
}

/// Value and gradient in one pass. The returned value is not clamped at zero.
pub fn mmd2_with_gradient(x: &Matrix, y: &Matrix, kernel: &KernelSpec) -> Result<(f64, Matrix)> {
    check(x, y, kernel)?;
    check_nonempty(x, y)?;
    let n = x.rows();
    let m = y.rows();
    let nf = n as f64;
    let mf = m as f64;
    let dim = x.cols();
    let mut grad = Matrix::zeros(n, dim);
    let mut xx = 0.0;
    let mut xy = 0.0;

    // d k(x_i, v) / d x_i = 2 k'(d2) (x_i - v)
    for i in 0..n {
        let xi = x.row(i);
        for j in i + 1..n {
            let xj = x.row(j);
            let d2 = squared_distance(xi, xj);
            xx += 2.0 * kernel.eval(d2);
            // pair (i, j) and (j, i) both appear in the double sum
            let coef = 2.0 * 2.0 * kernel.eval_deriv(d2) / (nf * nf);
            for c in 0..dim {
                let diff = xi[c] - xj[c];
                grad[(i, c)] += coef * diff;
                grad[(j, c)] -= coef * diff;
            }
        }
        xx += kernel.eval(0.0);
        let coef_xy = -2.0 * 2.0 / (nf * mf);
        for j in 0..m {
            let yj = y.row(j);
            let d2 = squared_distance(xi, yj);
            xy += kernel.eval(d2);
            let coef = coef_xy * kernel.eval_deriv(d2);
            for c in 0..dim {
                grad[(i, c)] += coef * (xi[c] - yj[c]);
            }
        }
    }
    let value = xx / (nf * nf) + self_sum(y, kernel) / (mf * mf) - 2.0 * xy / (nf * mf);
    Ok((value, grad))
}
