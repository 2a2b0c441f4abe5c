use super::Scalar;
use crate::error::{Error, Result};

/// Composite Simpson rule with `n` (even) subintervals on `[lo, hi]`.
///
/// For `f` with a bounded fourth derivative the error is
/// `(hi - lo)^5 / (180 n^4) * max|f''''|`.
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, lo: T, hi: T, n: usize) -> Result<T> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Parameter(format!(
            "Simpson rule needs an even number of subintervals >= 2, got {n}"
        )));
    }
    if !(lo < hi) {
        return Err(Error::Parameter(format!(
            "integration bounds must satisfy lo < hi, got [{lo}, {hi}]"
        )));
    }
    let h = (hi - lo) / T::from_usize_lossy(n);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let x = lo + h * T::from_usize_lossy(i);
        let w = if i % 2 == 1 { four } else { two };
        acc += w * f(x);
    }
    let total = acc * h / T::lit(3.0);
    if !total.is_finite() {
        return Err(Error::Numeric {
            coordinate: 0,
            detail: "integrand produced a non-finite value".into(),
        });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_is_exact() {
        assert_eq!(integrate(|_| 1.0, 0.0, 1.0, 2).unwrap(), 1.0);
    }

    #[test]
    fn sine_over_half_period() {
        let v = integrate(f64::sin, 0.0, PI, 512).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x: f64| (-x * x).exp(), -8.0, 8.0, 4096).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn rejects_odd_or_tiny_n() {
        assert!(integrate(|x: f64| x, 0.0, 1.0, 3).is_err());
        assert!(integrate(|x: f64| x, 0.0, 1.0, 0).is_err());
        assert!(integrate(|x: f64| x, 1.0, 0.0, 4).is_err());
    }

    #[test]
    fn cubic_is_exact() {
        let v = integrate(|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 2).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }
}
