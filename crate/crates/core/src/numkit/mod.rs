//! Deterministic dense numerics shared by every other module.

mod diff;
mod dft;
mod matrix;
mod quad;
mod rng;
mod scalar;
mod special;

pub use diff::finite_diff_grad;
pub use dft::{dft_magnitude_at, dft_magnitudes, one_sided_energy};
pub use matrix::{matmul, DenseMatrix};
pub use quad::integrate;
pub use rng::Rng;
pub use scalar::Scalar;
pub use special::{bessel_j0, erf, erfc, erfi, normal_cdf, normal_pdf, sigmoid, ERFI_MAX_ARG};
