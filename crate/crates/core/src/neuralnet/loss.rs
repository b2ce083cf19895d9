//! Loss functions returning `(mean loss, gradient w.r.t. the input)`.

use super::layer::{sigmoid, softmax_rows};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Mean negative log-likelihood of `labels` under softmax(`logits`).
/// The gradient is `(softmax - onehot) / batch`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if labels.len() != logits.rows() {
        return Err(Error::shape("softmax_cross_entropy", logits.shape(), (labels.len(), 1)));
    }
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= logits.cols()) {
        return Err(Error::Data(format!(
            "label {l} at row {i} outside [0, {})",
            logits.cols()
        )));
    }
    let batch = logits.rows().max(1) as f64;
    let mut grad = softmax_rows(logits);
    let mut loss = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - row[label];
        grad[(r, label)] -= 1.0;
    }
    grad.map_inplace(|v| v / batch);
    Ok((loss / batch, grad))
}

/// Mean binary cross-entropy of a single-column `logits` against `targets`
/// in `[0, 1]`, computed in the stable log-sum-exp form.
pub fn sigmoid_cross_entropy(logits: &Matrix, targets: &[f64]) -> Result<(f64, Matrix)> {
    if logits.cols() != 1 || logits.rows() != targets.len() {
        return Err(Error::shape(
            "sigmoid_cross_entropy",
            logits.shape(),
            (targets.len(), 1),
        ));
    }
    let batch = logits.rows().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(logits.rows(), 1);
    for (r, &t) in targets.iter().enumerate() {
        let x = logits[(r, 0)];
        // max(x, 0) - x t + ln(1 + e^{-|x|})
        loss += x.max(0.0) - x * t + (-x.abs()).exp().ln_1p();
        grad[(r, 0)] = (sigmoid(x) - t) / batch;
    }
    Ok((loss / batch, grad))
}

/// Mean over the batch of the squared Euclidean distance between rows.
pub fn l2_reconstruction_loss(output: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if output.shape() != target.shape() {
        return Err(Error::shape("l2_reconstruction_loss", output.shape(), target.shape()));
    }
    let batch = output.rows().max(1) as f64;
    let diff = output.sub(target)?;
    let loss = diff.data().iter().map(|d| d * d).sum::<f64>() / batch;
    Ok((loss, diff.scale(2.0 / batch)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn fd_check(f: impl Fn(&Matrix) -> f64, x: &Matrix, analytic: &Matrix, tol: f64) {
        let h = 1e-6;
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus.data_mut()[i] += h;
            let mut minus = x.clone();
            minus.data_mut()[i] -= h;
            let numeric = (f(&plus) - f(&minus)) / (2.0 * h);
            let a = analytic.data()[i];
            let rel = (numeric - a).abs() / numeric.abs().max(a.abs()).max(1e-8);
            assert!(rel < tol, "entry {i}: numeric {numeric} analytic {a}");
        }
    }

    #[test]
    fn uniform_logits_give_ln_c() {
        let logits = Matrix::zeros(3, 7);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 3, 6]).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_gradient_rows_sum_to_zero() {
        let logits = Rng::new(1).gaussian_matrix(4, 5, 0.0, 2.0).unwrap();
        let (_, g) = softmax_cross_entropy(&logits, &[0, 1, 2, 4]).unwrap();
        for r in 0..4 {
            assert!(g.row(r).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn cross_entropy_matches_finite_differences() {
        let labels = [2, 0, 1];
        let logits = Rng::new(2).gaussian_matrix(3, 4, 0.0, 1.0).unwrap();
        let (_, g) = softmax_cross_entropy(&logits, &labels).unwrap();
        fd_check(|m| softmax_cross_entropy(m, &labels).unwrap().0, &logits, &g, 1e-6);
    }

    #[test]
    fn out_of_range_label() {
        let logits = Matrix::zeros(1, 3);
        assert!(matches!(softmax_cross_entropy(&logits, &[3]), Err(Error::Data(_))));
    }

    #[test]
    fn l2_identity_and_hand_value() {
        let a = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let (loss, g) = l2_reconstruction_loss(&a, &a).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
        let (loss, _) = l2_reconstruction_loss(&a, &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(loss, 5.0);
    }

    #[test]
    fn l2_matches_finite_differences() {
        let mut rng = Rng::new(3);
        let out = rng.gaussian_matrix(3, 4, 0.0, 1.0).unwrap();
        let target = rng.gaussian_matrix(3, 4, 0.0, 1.0).unwrap();
        let (_, g) = l2_reconstruction_loss(&out, &target).unwrap();
        fd_check(|m| l2_reconstruction_loss(m, &target).unwrap().0, &out, &g, 1e-6);
    }

    #[test]
    fn l2_shape_mismatch() {
        assert!(matches!(
            l2_reconstruction_loss(&Matrix::zeros(1, 2), &Matrix::zeros(2, 1)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn sigmoid_ce_at_zero_is_ln2_and_matches_fd() {
        let (loss, _) = sigmoid_cross_entropy(&Matrix::zeros(4, 1), &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-12);
        let targets = [1.0, 0.0, 1.0];
        let logits = Rng::new(4).gaussian_matrix(3, 1, 0.0, 3.0).unwrap();
        let (_, g) = sigmoid_cross_entropy(&logits, &targets).unwrap();
        fd_check(|m| sigmoid_cross_entropy(m, &targets).unwrap().0, &logits, &g, 1e-6);
    }
}
