//! Losses, optimizers, the regression training loop and the gradient-check
//! harness.

mod adam;
mod config;
mod gradcheck;
mod loss;
mod train;

pub use crate::layers::Model;
pub use adam::{adam_step, sgd_step, AdamState};
pub use config::{Optimizer, TrainConfig};
pub use gradcheck::{analytic_gradient, compare_gradients, gradient_check, numeric_gradient, GradCheckReport};
pub use loss::{mse_loss, LossValue};
pub use train::{batch_loss, evaluate_rmse, train_regression, Dataset, ExperimentReport};
