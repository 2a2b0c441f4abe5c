use crate::error::{shape_err, Result};
use crate::numkit::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LossValue<T> {
    pub value: T,
    pub grad: Vec<T>,
}

/// Mean squared error and its gradient `2 (pred - target) / n`.
pub fn mse_loss<T: Scalar>(pred: &[T], target: &[T]) -> Result<LossValue<T>> {
    if pred.len() != target.len() {
        return Err(shape_err(format!(
            "prediction of length {} against target of length {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(shape_err("empty prediction"));
    }
    let n = T::from_usize_lossy(pred.len());
    let diff: Vec<T> = pred.iter().zip(target).map(|(&p, &t)| p - t).collect();
    let value = diff.iter().map(|&d| d * d).sum::<T>() / n;
    let two = T::lit(2.0);
    let grad = diff.into_iter().map(|d| two * d / n).collect();
    Ok(LossValue { value, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_diff_grad;

    #[test]
    fn exact_fit_is_zero() {
        let l = mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(l.value, 0.0);
        assert_eq!(l.grad, vec![0.0, 0.0]);
    }

    #[test]
    fn hand_example() {
        let l = mse_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(l.value, 0.5);
        assert_eq!(l.grad, vec![1.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let target = [0.3, -1.2, 2.5];
        let pred = [1.1, 0.4, -0.7];
        let l = mse_loss(&pred, &target).unwrap();
        let fd = finite_diff_grad(|p: &[f64]| mse_loss(p, &target).unwrap().value, &pred, 1e-6).unwrap();
        for (a, b) in l.grad.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }
}
