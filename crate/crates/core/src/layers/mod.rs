//! Feed-forward blocks: the spectral gating block, the plain MLP block and a
//! B-spline (KAN-style) layer, all with exact backward passes.

mod checkpoint;
mod layernorm;
mod mlp;
mod sgn;
mod spline;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointBlock};
pub use layernorm::{layer_norm, layer_norm_backward, LnStats, LN_EPS};
pub use mlp::{mlp_backward, mlp_forward, MlpCache, MlpGrads, MlpParams};
pub use sgn::{
    gate, homotopy_init, sgn_activation, sgn_backward, sgn_forward, JacobianTerms, SgnCache,
    SgnConfig, SgnGrads, SgnParams, SpectralMode,
};
pub use spline::{bspline_basis, SplineCache, SplineGrads, SplineLayerParams};

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::numkit::Scalar;

/// Input, hidden and output widths of a two-projection block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub d_in: usize,
    pub d_ff: usize,
    pub d_out: usize,
}

impl BlockShape {
    /// Transformer-style block: `d_model -> d_ff -> d_model`.
    pub fn ffn(d_model: usize, d_ff: usize) -> Self {
        Self {
            d_in: d_model,
            d_ff,
            d_out: d_model,
        }
    }
}

/// Read-only view of one named parameter block.
#[derive(Debug)]
pub struct BlockRef<'a, T> {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [T],
}

/// A model's trainable state as an ordered list of named blocks.
///
/// The order is fixed per type; optimizers, gradient checks and checkpoints
/// all rely on it.
pub trait ParamBlocks<T: Scalar> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>>;
    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])>;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.data.len()).sum()
    }

    fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for b in self.blocks() {
            out.extend_from_slice(b.data);
        }
        out
    }

    fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        let total = self.num_params();
        if flat.len() != total {
            return Err(shape_err(format!(
                "flat vector of length {} for {total} parameters",
                flat.len()
            )));
        }
        let mut off = 0;
        for (_, b) in self.blocks_mut() {
            b.copy_from_slice(&flat[off..off + b.len()]);
            off += b.len();
        }
        Ok(())
    }

    fn fill_zero(&mut self) {
        for (_, b) in self.blocks_mut() {
            b.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Euclidean norm over the named blocks.
    fn block_norm(&self, names: &[&str]) -> T {
        self.blocks()
            .iter()
            .filter(|b| names.contains(&b.name))
            .flat_map(|b| b.data.iter())
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    fn block(&self, name: &str) -> Option<Vec<T>> {
        self.blocks()
            .into_iter()
            .find(|b| b.name == name)
            .map(|b| b.data.to_vec())
    }
}

/// Differentiable model trained sample-by-sample.
pub trait Model<T: Scalar>: ParamBlocks<T> + Clone + Send + Sync {
    type Cache: Send;
    type Grads: ParamBlocks<T> + Send;

    fn kind(&self) -> &'static str;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn forward(&self, x: &[T]) -> Result<(Vec<T>, Self::Cache)>;
    /// Adds the parameter gradient for upstream gradient `dy` into `grads`.
    fn backward_into(&self, dy: &[T], cache: &Self::Cache, grads: &mut Self::Grads) -> Result<()>;
    fn zero_grads(&self) -> Self::Grads;

    fn predict(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward(x)?.0)
    }
}

pub(crate) fn check_len<T>(v: &[T], want: usize, what: &str) -> Result<()> {
    if v.len() != want {
        return Err(shape_err(format!(
            "{what} has length {}, expected {want}",
            v.len()
        )));
    }
    Ok(())
}
