//! Model specifications and a single type covering every trainable model.

use serde::{Deserialize, Serialize};
use sgn_core::layers::{
    BlockRef, MlpCache, MlpGrads, Model, ParamBlocks, SgnCache, SgnGrads, SplineCache, SplineGrads,
};
use sgn_core::{Activation, BlockShape, Error, Mlp, Result, Rng, SgnConfig, Sgn, SpectralMode, Spline};

/// Architecture of one model in a comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Sgn {
        d_ff: usize,
        m: usize,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_gate_bias")]
        gate_bias: f64,
        #[serde(default = "default_mode")]
        mode: SpectralMode,
        #[serde(default = "default_activation")]
        activation: Activation,
    },
    Mlp {
        d_ff: usize,
        activation: Activation,
    },
    Spline {
        grid: usize,
        order: usize,
    },
}

fn default_sigma() -> f64 {
    sgn_core::DEFAULT_SIGMA
}
fn default_eps() -> f64 {
    sgn_core::DEFAULT_EPS
}
fn default_gate_bias() -> f64 {
    sgn_core::DEFAULT_GATE_BIAS
}
fn default_mode() -> SpectralMode {
    SpectralMode::Gated
}
fn default_activation() -> Activation {
    Activation::Gelu
}

impl ModelSpec {
    pub fn sgn(d_ff: usize, m: usize) -> Self {
        Self::Sgn {
            d_ff,
            m,
            sigma: default_sigma(),
            eps: default_eps(),
            gate_bias: default_gate_bias(),
            mode: default_mode(),
            activation: default_activation(),
        }
    }

    pub fn mlp(d_ff: usize, activation: Activation) -> Self {
        Self::Mlp { d_ff, activation }
    }

    /// Same spec with a different spectral mode (no-op for non-SGN models).
    pub fn with_mode(mut self, new_mode: SpectralMode) -> Self {
        if let Self::Sgn { mode, .. } = &mut self {
            *mode = new_mode;
        }
        self
    }

    pub fn with_sigma(mut self, new_sigma: f64) -> Self {
        if let Self::Sgn { sigma, .. } = &mut self {
            *sigma = new_sigma;
        }
        self
    }

    /// Parameter count for a `d_in -> d_out` instance.
    pub fn num_params(&self, d_in: usize, d_out: usize) -> usize {
        match *self {
            Self::Sgn { d_ff, m, .. } => {
                d_in * d_ff + d_ff + d_ff * d_out + d_out
                    + sgn_core::complexity::sgn_param_overhead(d_ff as u64, m as u64, true) as usize
            }
            Self::Mlp { d_ff, .. } => d_in * d_ff + d_ff + d_ff * d_out + d_out,
            Self::Spline { grid, order } => {
                sgn_core::complexity::kan_params(d_in as u64, d_out as u64, grid as u64, order as u64) as usize
            }
        }
    }

    /// Builds the model; `domain` is the input interval used by the spline
    /// layer's grid.
    pub fn build(&self, d_in: usize, d_out: usize, domain: (f64, f64), seed: u64) -> Result<AnyModel> {
        let mut rng = Rng::new(seed);
        Ok(match *self {
            Self::Sgn {
                d_ff,
                m,
                sigma,
                eps,
                gate_bias,
                mode,
                activation,
            } => {
                let mut cfg = SgnConfig::new(BlockShape { d_in, d_ff, d_out }, m);
                cfg.sigma = sigma;
                cfg.eps = eps;
                cfg.gate_bias_init = gate_bias;
                cfg.mode = mode;
                cfg.activation = activation;
                cfg.seed = seed;
                AnyModel::Sgn(Sgn::init(&cfg, &mut rng)?)
            }
            Self::Mlp { d_ff, activation } => {
                AnyModel::Mlp(Mlp::init(BlockShape { d_in, d_ff, d_out }, activation, &mut rng))
            }
            Self::Spline { grid, order } => AnyModel::Spline(
                Spline::init(d_in, d_out, grid, order, &mut rng)?.with_domain(domain.0, domain.1)?,
            ),
        })
    }
}

/// MLP hidden width whose parameter count is closest to `target`.
pub fn mlp_width_for_budget(target: usize, d_in: usize, d_out: usize) -> usize {
    let per = (d_in + d_out + 1) as f64;
    (((target as f64 - d_out as f64) / per).round() as usize).max(1)
}

/// Spline grid size whose parameter count is closest to `target`.
pub fn spline_grid_for_budget(target: usize, d_in: usize, d_out: usize, order: usize) -> usize {
    let per_edge = (target as f64 - d_out as f64) / (d_in * d_out) as f64;
    ((per_edge - order as f64 - 3.0).round() as usize).max(1)
}

/// Whether two parameter counts agree within `tol` (relative to the larger).
pub fn budgets_match(a: usize, b: usize, tol: f64) -> bool {
    let (a, b) = (a as f64, b as f64);
    (a - b).abs() <= tol * a.max(b)
}

#[derive(Clone, Debug)]
pub enum AnyModel {
    Sgn(Sgn),
    Mlp(Mlp),
    Spline(Spline),
}

pub enum AnyCache {
    Sgn(SgnCache<f64>),
    Mlp(MlpCache<f64>),
    Spline(SplineCache<f64>),
}

pub enum AnyGrads {
    Sgn(SgnGrads<f64>),
    Mlp(MlpGrads<f64>),
    Spline(SplineGrads<f64>),
}

macro_rules! dispatch {
    ($v:expr, $m:ident => $e:expr) => {
        match $v {
            AnyModel::Sgn($m) => $e,
            AnyModel::Mlp($m) => $e,
            AnyModel::Spline($m) => $e,
        }
    };
}

impl ParamBlocks<f64> for AnyModel {
    fn blocks(&self) -> Vec<BlockRef<'_, f64>> {
        dispatch!(self, m => m.blocks())
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        dispatch!(self, m => m.blocks_mut())
    }
}

impl ParamBlocks<f64> for AnyGrads {
    fn blocks(&self) -> Vec<BlockRef<'_, f64>> {
        match self {
            Self::Sgn(g) => g.blocks(),
            Self::Mlp(g) => g.blocks(),
            Self::Spline(g) => g.blocks(),
        }
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        match self {
            Self::Sgn(g) => g.blocks_mut(),
            Self::Mlp(g) => g.blocks_mut(),
            Self::Spline(g) => g.blocks_mut(),
        }
    }
}

impl Model<f64> for AnyModel {
    type Cache = AnyCache;
    type Grads = AnyGrads;

    fn kind(&self) -> &'static str {
        dispatch!(self, m => m.kind())
    }

    fn input_dim(&self) -> usize {
        dispatch!(self, m => m.input_dim())
    }

    fn output_dim(&self) -> usize {
        dispatch!(self, m => m.output_dim())
    }

    fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, AnyCache)> {
        Ok(match self {
            Self::Sgn(m) => {
                let (y, c) = m.forward(x)?;
                (y, AnyCache::Sgn(c))
            }
            Self::Mlp(m) => {
                let (y, c) = m.forward(x)?;
                (y, AnyCache::Mlp(c))
            }
            Self::Spline(m) => {
                let (y, c) = m.forward(x)?;
                (y, AnyCache::Spline(c))
            }
        })
    }

    fn backward_into(&self, dy: &[f64], cache: &AnyCache, grads: &mut AnyGrads) -> Result<()> {
        match (self, cache, grads) {
            (Self::Sgn(m), AnyCache::Sgn(c), AnyGrads::Sgn(g)) => m.backward_into(dy, c, g),
            (Self::Mlp(m), AnyCache::Mlp(c), AnyGrads::Mlp(g)) => m.backward_into(dy, c, g),
            (Self::Spline(m), AnyCache::Spline(c), AnyGrads::Spline(g)) => m.backward_into(dy, c, g),
            _ => Err(Error::Shape("cache or gradient of a different model kind".into())),
        }
    }

    fn zero_grads(&self) -> AnyGrads {
        match self {
            Self::Sgn(m) => AnyGrads::Sgn(m.zero_grads()),
            Self::Mlp(m) => AnyGrads::Mlp(m.zero_grads()),
            Self::Spline(m) => AnyGrads::Spline(m.zero_grads()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_counts_match_built_models() {
        let specs = [
            ModelSpec::sgn(16, 4),
            ModelSpec::mlp(30, Activation::Relu),
            ModelSpec::Spline { grid: 7, order: 3 },
        ];
        for s in specs {
            for (d_in, d_out) in [(1, 1), (3, 2)] {
                let m = s.build(d_in, d_out, (-1.0, 1.0), 0).unwrap();
                assert_eq!(m.num_params(), s.num_params(d_in, d_out), "{s:?}");
            }
        }
    }

    #[test]
    fn budget_helpers_land_within_ten_percent() {
        for (d_ff, m, d_in) in [(16, 4, 1), (32, 8, 2), (64, 16, 1), (24, 6, 4)] {
            let target = ModelSpec::sgn(d_ff, m).num_params(d_in, 1);
            let w = mlp_width_for_budget(target, d_in, 1);
            assert!(budgets_match(target, ModelSpec::mlp(w, Activation::Gelu).num_params(d_in, 1), 0.1));
            let g = spline_grid_for_budget(target, d_in, 1, 3);
            assert!(budgets_match(target, ModelSpec::Spline { grid: g, order: 3 }.num_params(d_in, 1), 0.1));
        }
    }

    #[test]
    fn spec_json_round_trip_and_unknown_field() {
        let s = ModelSpec::sgn(8, 2).with_mode(SpectralMode::FixedGate(0.1));
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ModelSpec>(&text).unwrap(), s);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"mlp","d_ff":3,"activation":"gelu","x":1}"#).is_err());
    }
}
