use serde::{Deserialize, Serialize};

use super::{mse_loss, Dataset};
use crate::error::{Error, Result};
use crate::layers::{Model, ParamBlocks};
use crate::numkit::finite_diff_grad;

/// Worst coordinate of an analytic-versus-numeric gradient comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub num_params: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub worst_block: String,
    pub analytic: f64,
    pub numeric: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn loss<M: Model<f64>>(model: &M, data: &Dataset<f64>) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        total += mse_loss(&model.predict(x)?, y)?.value;
    }
    Ok(total / data.len() as f64)
}

/// Backpropagated gradient of the mean per-sample MSE, in block order.
pub fn analytic_gradient<M: Model<f64>>(model: &M, data: &Dataset<f64>) -> Result<Vec<f64>> {
    let mut grads = model.zero_grads();
    let n = data.len() as f64;
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        let (pred, cache) = model.forward(x)?;
        let dy: Vec<f64> = mse_loss(&pred, y)?.grad.into_iter().map(|g| g / n).collect();
        model.backward_into(&dy, &cache, &mut grads)?;
    }
    Ok(grads.to_flat())
}

/// Central differences of the same loss with step `h`.
pub fn numeric_gradient<M: Model<f64>>(model: &M, data: &Dataset<f64>, h: f64) -> Result<Vec<f64>> {
    let mut probe = model.clone();
    let mut failure = None;
    let g = finite_diff_grad(
        |p: &[f64]| {
            if let Err(e) = probe.set_flat(p) {
                failure.get_or_insert(e);
                return f64::NAN;
            }
            loss(&probe, data).unwrap_or(f64::NAN)
        },
        &model.to_flat(),
        h,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    g
}

/// Coordinate-wise relative error `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn compare_gradients<M: ParamBlocks<f64>>(
    model: &M,
    analytic: &[f64],
    numeric: &[f64],
    tolerance: f64,
) -> Result<GradCheckReport> {
    if analytic.len() != numeric.len() || analytic.len() != model.num_params() {
        return Err(Error::Shape("gradient lengths differ".into()));
    }
    let mut worst = (0usize, -1.0f64);
    for (i, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        if !a.is_finite() {
            return Err(Error::Numeric {
                coordinate: i,
                detail: format!("analytic gradient is {a}"),
            });
        }
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
        if rel > worst.1 {
            worst = (i, rel);
        }
    }
    let (idx, rel) = worst;
    let mut offset = 0;
    let mut block = String::new();
    for b in model.blocks() {
        if idx < offset + b.data.len() {
            block = format!("{}[{}]", b.name, idx - offset);
            break;
        }
        offset += b.data.len();
    }
    Ok(GradCheckReport {
        num_params: analytic.len(),
        max_rel_error: rel,
        worst_index: idx,
        worst_block: block,
        analytic: analytic[idx],
        numeric: numeric[idx],
        tolerance,
        passed: rel < tolerance,
    })
}

/// Analytic gradients against central differences (`h = 1e-5`).
pub fn gradient_check<M: Model<f64>>(model: &M, data: &Dataset<f64>, tolerance: f64) -> Result<GradCheckReport> {
    let a = analytic_gradient(model, data)?;
    let n = numeric_gradient(model, data, 1e-5)?;
    compare_gradients(model, &a, &n, tolerance)
}
