use super::Scalar;
use crate::error::{Error, Result};

/// Central finite-difference gradient of `loss` at `params`.
pub fn finite_diff_grad<T: Scalar>(
    mut loss: impl FnMut(&[T]) -> T,
    params: &[T],
    h: T,
) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(Error::Parameter(format!("step must be positive, got {h}")));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = loss(&p);
        p[i] = orig - h;
        let down = loss(&p);
        p[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric {
                coordinate: i,
                detail: format!("loss not finite at probe (+: {up}, -: {down})"),
            });
        }
        grad.push((up - down) / (h + h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let g = finite_diff_grad(|p: &[f64]| 0.5 * p.iter().map(|v| v * v).sum::<f64>(), &[1.0, 2.0], 1e-5)
            .unwrap();
        assert!((g[0] - 1.0).abs() < 1e-8);
        assert!((g[1] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn sine_at_zero() {
        let g = finite_diff_grad(|p: &[f64]| p[0].sin(), &[0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_names_coordinate() {
        let err = finite_diff_grad(
            |p: &[f64]| if p[1] > 0.5 { f64::NAN } else { 0.0 },
            &[0.0, 0.5],
            1e-3,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Numeric { coordinate: 1, .. }));
    }
}
