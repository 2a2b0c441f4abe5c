//! Special functions.
//!
//! * `erf`, `erfc`: the `libm` implementations, evaluated in `f64`.
//! * `erfi`: Maclaurin series (all terms positive, no cancellation) on
//!   `|x| <= 8`.
//! * `bessel_j0`: the `libm` implementation, evaluated in `f64`.

use super::Scalar;
use crate::error::{Error, Result};

/// Largest `|x|` accepted by [`erfi`].
pub const ERFI_MAX_ARG: f64 = 8.0;

fn two_over_sqrt_pi<T: Scalar>() -> T {
    T::FRAC_2_SQRT_PI()
}

pub fn erf<T: Scalar>(x: T) -> T {
    T::lit(libm::erf(x.as_f64()))
}

/// Complementary error function, accurate in the upper tail.
pub fn erfc<T: Scalar>(x: T) -> T {
    T::lit(libm::erfc(x.as_f64()))
}

/// Imaginary error function `erfi(x) = -i erf(i x)`.
pub fn erfi<T: Scalar>(x: T) -> Result<T> {
    if !x.is_finite() || x.abs() > T::lit(ERFI_MAX_ARG) {
        return Err(Error::Range(format!(
            "erfi supports |x| <= {ERFI_MAX_ARG}, got {x}"
        )));
    }
    let x2 = x * x;
    let mut power = x; // x^(2k+1) / k!
    let mut sum = x;
    let mut k = 1usize;
    while k < 400 {
        power = power * x2 / T::from_usize_lossy(k);
        let term = power / T::from_usize_lossy(2 * k + 1);
        sum += term;
        if term.abs() <= T::epsilon() * T::lit(1e-3) * sum.abs() {
            break;
        }
        k += 1;
    }
    Ok(two_over_sqrt_pi::<T>() * sum)
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0<T: Scalar>(x: T) -> T {
    T::lit(libm::j0(x.as_f64()))
}

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    (-x * x * T::lit(0.5)).exp() / (T::TAU()).sqrt()
}

/// Standard normal CDF `(1 + erf(x / sqrt 2)) / 2`.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    // the lower tail goes through erfc to keep its relative accuracy
    T::lit(0.5) * erfc(-x * T::FRAC_1_SQRT_2())
}

/// Logistic sigmoid, evaluated without overflow for large `|x|`.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
