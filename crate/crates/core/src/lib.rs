//! Spectral gating networks.
//!
//! A feed-forward block `y = W2 T(W1 x + b1) + b2` whose element-wise
//! activation is augmented with a gated, trainable random-Fourier-feature
//! branch:
//!
//! ```text
//! T(u) = phi(u) + G(u) * (gamma(u) A_r)
//! G(u) = sigmoid(w_g * LN(u) + b_g)
//! gamma(u) = sqrt(2/m) [cos(W_r^T u + b_r), sin(W_r^T u + b_r)]
//! ```
//!
//! The crate provides exact forward/backward passes, homotopy-consistent
//! initialization, MLP and B-spline baselines, closed-form cost models and a
//! small training stack (MSE, Adam, gradient checking).
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the benchmarks,
//! checkpoints and gradient checks use.

pub mod activations;
pub mod complexity;
pub mod error;
pub mod layers;
pub mod numkit;
pub mod rff;
pub mod training;

pub use activations::Activation;
pub use error::{Error, Result};
pub use layers::{
    BlockShape, MlpParams, ParamBlocks, SgnConfig, SgnParams, SpectralMode, SplineLayerParams,
};
pub use numkit::{DenseMatrix, Rng, Scalar};
pub use rff::{RffParams, ScaleMode};
pub use training::{AdamState, Dataset, ExperimentReport, Model, TrainConfig};

/// Row-major `f64` matrix.
pub type Matrix = DenseMatrix<f64>;
/// Row-major `f32` matrix.
pub type Matrix32 = DenseMatrix<f32>;
/// SGN block parameters in double precision.
pub type Sgn = SgnParams<f64>;
/// SGN block parameters in single precision.
pub type Sgn32 = SgnParams<f32>;
/// Two-layer MLP block in double precision.
pub type Mlp = MlpParams<f64>;
/// B-spline (KAN-style) layer in double precision.
pub type Spline = SplineLayerParams<f64>;
/// Fourier-feature parameters in double precision.
pub type Rff = RffParams<f64>;
/// Default frequency bandwidth scale for Fourier-feature initialization.
pub const DEFAULT_SIGMA: f64 = 1.64;
/// Default spectral projection scale at initialization.
pub const DEFAULT_EPS: f64 = 1e-2;
/// Default gate bias at initialization (gate ~ 0.018).
pub const DEFAULT_GATE_BIAS: f64 = -4.0;
