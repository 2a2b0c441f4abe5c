//! Base activations and the GELU spectral-energy analysis used to pick the
//! default Fourier-feature bandwidth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{erfi, integrate, normal_cdf, normal_pdf, sigmoid, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Gelu,
    Relu,
    Silu,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Self::Gelu, Self::Relu, Self::Silu, Self::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gelu => "gelu",
            Self::Relu => "relu",
            Self::Silu => "silu",
            Self::Tanh => "tanh",
        }
    }

    #[inline]
    pub fn value<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Gelu => gelu(x),
            Self::Relu => x.max(T::zero()),
            Self::Silu => x * sigmoid(x),
            Self::Tanh => x.tanh(),
        }
    }

    #[inline]
    pub fn derivative<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Gelu => gelu_prime(x),
            Self::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Silu => {
                let s = sigmoid(x);
                s * (T::one() + x * (T::one() - s))
            }
            Self::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gelu" => Ok(Self::Gelu),
            "relu" => Ok(Self::Relu),
            "silu" => Ok(Self::Silu),
            "tanh" => Ok(Self::Tanh),
            other => Err(Error::Parameter(format!("unknown activation '{other}'"))),
        }
    }
}

/// Exact GELU, `x * Phi(x)`.
#[inline]
pub fn gelu<T: Scalar>(x: T) -> T {
    x * normal_cdf(x)
}

/// `Phi(x) + x * pdf(x)`.
#[inline]
pub fn gelu_prime<T: Scalar>(x: T) -> T {
    normal_cdf(x) + x * normal_pdf(x)
}

/// Largest `|omega|` accepted by [`gelu_spectrum`].
pub const SPECTRUM_MAX_OMEGA: f64 = 8.0;

/// `|F(omega)|^2` for the closed-form GELU transform
///
/// ```text
/// F(w) = sqrt(pi/2) [ -w e^{-w^2/2} (1 + erf(i w / sqrt 2)) + (i / sqrt 2) e^{-w^2} ]
/// ```
///
/// with `erf(i t) = i erfi(t)`, so
/// `Re F = -sqrt(pi/2) w e^{-w^2/2}` and
/// `Im F = sqrt(pi/2) (e^{-w^2}/sqrt 2 - w e^{-w^2/2} erfi(w / sqrt 2))`.
///
/// The expression is used as written. Note that `e^{-w^2/2} erfi(w/sqrt 2)`
/// behaves like `sqrt(2/pi)/w` for large `w`, so `S(w)` tends to 1 rather
/// than decaying.
pub fn gelu_spectrum<T: Scalar>(omega: T) -> Result<T> {
    if !omega.is_finite() || omega.abs() > T::lit(SPECTRUM_MAX_OMEGA) {
        return Err(Error::Range(format!(
            "GELU spectrum evaluated for |omega| <= {SPECTRUM_MAX_OMEGA}, got {omega}"
        )));
    }
    let a = (T::FRAC_PI_2()).sqrt();
    let half_gauss = (-omega * omega * T::lit(0.5)).exp();
    let re = -a * omega * half_gauss;
    let im = a
        * ((-omega * omega).exp() * T::FRAC_1_SQRT_2()
            - omega * half_gauss * erfi(omega * T::FRAC_1_SQRT_2())?);
    Ok(re * re + im * im)
}

/// Result of the optimal spectral-scale computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaDerivation {
    /// `int S(w) dw`
    pub i1: f64,
    /// `int S(w)^2 dw`
    pub i2: f64,
    /// `sqrt(i1 / i2)`
    pub alpha: f64,
    /// Simpson subintervals.
    pub n: usize,
    /// Integration range `[-range, range]`.
    pub range: f64,
}

pub const ALPHA_QUADRATURE_N: usize = 4096;
pub const ALPHA_RANGE: f64 = 8.0;

/// Minimizer of `int (1 - alpha^2 S(w))^2 dw`, i.e.
/// `alpha = sqrt(int S / int S^2)`, with both integrals by Simpson's rule on
/// `[-8, 8]` using 4096 subintervals.
pub fn derive_alpha_opt() -> Result<AlphaDerivation> {
    derive_alpha_opt_with(ALPHA_QUADRATURE_N, ALPHA_RANGE)
}

pub fn derive_alpha_opt_with(n: usize, range: f64) -> Result<AlphaDerivation> {
    if !(range > 0.0 && range <= SPECTRUM_MAX_OMEGA) {
        return Err(Error::Parameter(format!(
            "integration range must be in (0, {SPECTRUM_MAX_OMEGA}], got {range}"
        )));
    }
    let s = |w: f64| gelu_spectrum(w).unwrap_or(f64::NAN);
    let i1 = integrate(s, -range, range, n)?;
    let i2 = integrate(|w| s(w).powi(2), -range, range, n)?;
    Ok(AlphaDerivation {
        i1,
        i2,
        alpha: (i1 / i2).sqrt(),
        n,
        range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Rng;

    #[test]
    fn gelu_values() {
        assert_eq!(gelu(0.0f64), 0.0);
        assert!((gelu(10.0f64) - 10.0).abs() < 1e-9);
        assert!((gelu(1.0f64) - 0.8413447461).abs() < 1e-10);
        // high-precision reference values
        for (x, want) in [
            (-4.2f64, -5.60521458668065794780e-5),
            (-2.5, -0.0155241633144403379174),
            (-0.7, -0.169374556556151109286),
            (2.3, 2.27533454695014546029),
        ] {
            assert!(((gelu(x) - want) / want).abs() < 1e-13, "gelu({x})");
        }
    }

    #[test]
    fn gelu_prime_values() {
        assert_eq!(gelu_prime(0.0f64), 0.5);
        assert!((gelu_prime(10.0f64) - 1.0).abs() < 1e-9);
        assert!((gelu_prime(1.0f64) - 1.0833154706).abs() < 1e-10);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for act in Activation::ALL {
            let mut worst = 0.0f64;
            for i in 0..1000 {
                let x = -5.0 + 10.0 * i as f64 / 999.0;
                let fd = (act.value(x + h) - act.value(x - h)) / (2.0 * h);
                worst = worst.max((fd - act.derivative(x)).abs());
            }
            assert!(worst < 1e-6, "{}: {worst}", act.name());
        }
    }

    #[test]
    fn parses_names() {
        for act in Activation::ALL {
            assert_eq!(act.name().parse::<Activation>().unwrap(), act);
        }
        assert!("swish".parse::<Activation>().is_err());
    }

    #[test]
    fn spectrum_at_zero_is_pi_over_four() {
        let s = gelu_spectrum(0.0f64).unwrap();
        assert!((s - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
        assert!((s - 0.7853981634).abs() < 1e-10);
    }

    #[test]
    fn spectrum_symmetric() {
        let mut rng = Rng::new(21);
        for _ in 0..200 {
            let w = rng.uniform_range(-8.0, 8.0);
            let (a, b) = (gelu_spectrum(w).unwrap(), gelu_spectrum(-w).unwrap());
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    /// `e^{-w^2/2} erfi(w/sqrt 2) = sqrt(2/pi) / w (1 + 1/w^2 + 3/w^4 + ...)`,
    /// so `Im F -> -1`, `Re F -> 0` and `S -> 1` from above.
    #[test]
    fn spectrum_approaches_one_at_large_omega() {
        for w in [6.0f64, 7.0, 8.0] {
            let asym = 1.0 + 2.0 / (w * w);
            let s = gelu_spectrum(w).unwrap();
            assert!((s - asym).abs() < 10.0 / w.powi(4), "S({w}) = {s}");
        }
        assert!(gelu_spectrum(8.0f64).unwrap() > gelu_spectrum(1.0f64).unwrap());
    }

    #[test]
    fn spectrum_out_of_range() {
        assert!(matches!(gelu_spectrum(8.01f64), Err(Error::Range(_))));
    }

    #[test]
    fn alpha_converged_in_quadrature() {
        let a = derive_alpha_opt().unwrap();
        let b = derive_alpha_opt_with(2 * ALPHA_QUADRATURE_N, ALPHA_RANGE).unwrap();
        assert!((a.alpha - b.alpha).abs() < 1e-4);
        assert!(a.i1.is_finite() && a.i2.is_finite() && a.alpha > 0.0);
    }

    #[test]
    fn alpha_rejects_bad_range() {
        assert!(derive_alpha_opt_with(64, 9.0).is_err());
        assert!(derive_alpha_opt_with(63, 4.0).is_err());
    }
}
