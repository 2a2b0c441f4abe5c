//! Random Fourier features with trainable frequencies and phases.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::numkit::{DenseMatrix, Rng, Scalar};

/// Feature scaling convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMode {
    /// `sqrt(2/m) [cos(W^T u + b), sin(W^T u + b)]`, used inside the SGN block.
    LayerScale,
    /// `sqrt(1/m) [cos(W^T u), sin(W^T u)]`; phases are ignored. With this
    /// scale `z(x)^T z(y) = (1/m) sum_j cos(w_j^T (x - y))` is an unbiased
    /// estimator of the shift-invariant kernel whose spectral measure the
    /// frequencies were drawn from, and `z(x)^T z(x) = 1`.
    KernelScale,
}

/// Frequencies `W_r` (`d x m`, one frequency per column) and phases `b_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RffParams<T> {
    pub wr: DenseMatrix<T>,
    pub br: Vec<T>,
    pub scale_mode: ScaleMode,
}

impl<T: Scalar> RffParams<T> {
    pub fn new(wr: DenseMatrix<T>, br: Vec<T>, scale_mode: ScaleMode) -> Result<Self> {
        if wr.cols() == 0 {
            return Err(Error::Parameter("spectral budget m must be >= 1".into()));
        }
        if br.len() != wr.cols() {
            return Err(shape_err(format!(
                "{} phases for {} frequencies",
                br.len(),
                wr.cols()
            )));
        }
        Ok(Self { wr, br, scale_mode })
    }

    /// Input dimension.
    pub fn d(&self) -> usize {
        self.wr.rows()
    }

    /// Spectral budget.
    pub fn m(&self) -> usize {
        self.wr.cols()
    }

    pub fn scale(&self) -> T {
        let m = T::from_usize_lossy(self.m());
        match self.scale_mode {
            ScaleMode::LayerScale => (T::lit(2.0) / m).sqrt(),
            ScaleMode::KernelScale => (T::one() / m).sqrt(),
        }
    }

    fn check_input(&self, u: &[T]) -> Result<()> {
        if u.len() != self.d() {
            return Err(shape_err(format!(
                "input of length {} for features over dimension {}",
                u.len(),
                self.d()
            )));
        }
        Ok(())
    }

    /// Arguments `W_r^T u + b_r` (phases omitted under `KernelScale`).
    pub fn arguments(&self, u: &[T]) -> Result<Vec<T>> {
        let mut z = self.wr.matvec_t(u)?;
        if self.scale_mode == ScaleMode::LayerScale {
            for (zj, &b) in z.iter_mut().zip(&self.br) {
                *zj += b;
            }
        }
        Ok(z)
    }

    /// Feature vector `[cos block, sin block]` of length `2m`.
    pub fn features(&self, u: &[T]) -> Result<Vec<T>> {
        self.check_input(u)?;
        let z = self.arguments(u)?;
        Ok(features_from_arguments(&z, self.scale()))
    }

    /// `z(x)^T z(y)`; only meaningful under `KernelScale`.
    pub fn kernel_estimate(&self, x: &[T], y: &[T]) -> Result<T> {
        if self.scale_mode != ScaleMode::KernelScale {
            return Err(Error::Mode(
                "kernel estimates need KernelScale features; LayerScale is biased by a factor of 2"
                    .into(),
            ));
        }
        let zx = self.features(x)?;
        let zy = self.features(y)?;
        Ok(zx.iter().zip(&zy).map(|(&a, &b)| a * b).sum())
    }

    /// Jacobian of [`features`](Self::features) with respect to `u`, `2m x d`.
    pub fn feature_jacobian(&self, u: &[T]) -> Result<DenseMatrix<T>> {
        self.check_input(u)?;
        let m = self.m();
        let d = self.d();
        let z = self.arguments(u)?;
        let s = self.scale();
        let mut jac = DenseMatrix::zeros(2 * m, d);
        for (j, &zj) in z.iter().enumerate() {
            let (sin, cos) = zj.sin_cos();
            for i in 0..d {
                let w = self.wr.get(i, j);
                jac.set(j, i, -s * sin * w);
                jac.set(m + j, i, s * cos * w);
            }
        }
        Ok(jac)
    }
}

pub(crate) fn features_from_arguments<T: Scalar>(z: &[T], scale: T) -> Vec<T> {
    let m = z.len();
    let mut out = vec![T::zero(); 2 * m];
    for (j, &zj) in z.iter().enumerate() {
        let (sin, cos) = zj.sin_cos();
        out[j] = scale * cos;
        out[m + j] = scale * sin;
    }
    out
}

/// Frequencies i.i.d. `N(0, sigma^2 / d)`, phases i.i.d. `U[0, 2 pi)`,
/// `LayerScale` features.
pub fn rff_init<T: Scalar>(d: usize, m: usize, sigma: f64, rng: &mut Rng) -> Result<RffParams<T>> {
    rff_init_with_mode(d, m, sigma, ScaleMode::LayerScale, rng)
}

pub fn rff_init_with_mode<T: Scalar>(
    d: usize,
    m: usize,
    sigma: f64,
    scale_mode: ScaleMode,
    rng: &mut Rng,
) -> Result<RffParams<T>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!(
            "bandwidth scale sigma must be positive, got {sigma}"
        )));
    }
    if d == 0 || m == 0 {
        return Err(Error::Parameter(format!(
            "feature dimensions must be positive, got d={d}, m={m}"
        )));
    }
    let std = sigma / (d as f64).sqrt();
    let wr = DenseMatrix::from_fn(d, m, |_, _| T::lit(rng.gaussian(0.0, std)));
    let br = (0..m)
        .map(|_| T::lit(rng.uniform_range(0.0, std::f64::consts::TAU)))
        .collect();
    RffParams::new(wr, br, scale_mode)
}
