//! Central finite differences for checking analytic gradients.

use super::Mlp;
use crate::error::Result;
use crate::numerics::Matrix;

/// `d loss / d theta` for every parameter of `net`, in [`Mlp::params`] order.
pub fn numeric_param_gradient(net: &Mlp, step: f64, mut loss: impl FnMut(&Mlp) -> Result<f64>) -> Result<Vec<f64>> {
    let base = net.params();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(base.len());
    for (i, &theta) in base.iter().enumerate() {
        probe.set_param(i, theta + step);
        let up = loss(&probe)?;
        probe.set_param(i, theta - step);
        let down = loss(&probe)?;
        probe.set_param(i, theta);
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// `d f / d x` for every entry of `x`.
pub fn numeric_input_gradient(x: &Matrix, step: f64, mut f: impl FnMut(&Matrix) -> Result<f64>) -> Result<Matrix> {
    let mut probe = x.clone();
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.len() {
        let v = x.data()[i];
        probe.data_mut()[i] = v + step;
        let up = f(&probe)?;
        probe.data_mut()[i] = v - step;
        let down = f(&probe)?;
        probe.data_mut()[i] = v;
        out.data_mut()[i] = (up - down) / (2.0 * step);
    }
    Ok(out)
}

/// `|a - n| / max(|a|, |n|)` over whole vectors; 0 when both are zero.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_input_gradient() {
        let x = Matrix::from_rows(&[[1.0, -2.0]]).unwrap();
        let g = numeric_input_gradient(&x, 1e-5, |m| Ok(m.data().iter().map(|v| v * v).sum())).unwrap();
        assert!((g.data()[0] - 2.0).abs() < 1e-8);
        assert!((g.data()[1] + 4.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_cases() {
        assert_eq!(relative_error(&[0.0], &[0.0]), 0.0);
        assert_eq!(relative_error(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((relative_error(&[1.0], &[2.0]) - 0.5).abs() < 1e-15);
    }
}
