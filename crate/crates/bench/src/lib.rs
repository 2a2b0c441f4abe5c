//! Benchmark tasks and experiment runners for spectral gating networks.

pub mod ablation;
pub mod extrapolation;
pub mod fit;
pub mod models;
pub mod parallel;
pub mod probe;
pub mod sincos;
pub mod studies;
pub mod tasks;
