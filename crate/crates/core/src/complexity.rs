//! Closed-form parameter and FLOP counts. A multiply-add counts as 2 FLOPs.
//!
//! Two published tallies of the spectral overhead disagree (a single-layer
//! table with a `4 d M` leading term, and a per-token FFN decomposition with
//! `6 d_ff m`). Both are available as named [`Convention`]s and are never
//! mixed.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Sgn,
    Kan,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mlp => "mlp",
            Self::Sgn => "sgn",
            Self::Kan => "kan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// FFN-block accounting: spectral overhead `(d_ff+1)m + 2m d_ff + 2d_ff`,
    /// FLOPs `6 d_ff m` plus an elementwise tally.
    PerToken,
    /// Single-layer table: SGN with a per-channel coefficient head,
    /// FLOPs `4 d_in M + 2 d_in + 2 d_in d_out + 5 d_in`.
    SingleLayer,
}

impl Convention {
    pub fn name(self) -> &'static str {
        match self {
            Self::PerToken => "per_token",
            Self::SingleLayer => "single_layer",
        }
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_token" => Ok(Self::PerToken),
            "single_layer" => Ok(Self::SingleLayer),
            other => Err(Error::Parameter(format!("unknown FLOPs convention {other:?}"))),
        }
    }
}

/// Elementwise FLOPs per hidden channel in the per-token tally:
/// LayerNorm 6 (centre, square, accumulate, scale, affine 2), gate affine 2,
/// sigmoid 2, gate product 1, branch sum 1.
pub const ELEMENTWISE_FLOPS_PER_CHANNEL: u64 = 12;
/// Phase add plus one cosine and one sine per frequency.
pub const TRIG_FLOPS_PER_FREQUENCY: u64 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub model: ModelKind,
    pub convention: Convention,
    pub d_in: u64,
    pub d_out: u64,
    pub m: Option<u64>,
    pub grid: Option<u64>,
    pub order: Option<u64>,
    pub params: u64,
    pub flops: u64,
}

pub const CSV_HEADER: &str = "model,convention,d_in,d_out,m,G,K,params,flops";

impl CostReport {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.model.name(),
            self.convention.name(),
            self.d_in,
            self.d_out,
            opt(self.m),
            opt(self.grid),
            opt(self.order),
            self.params,
            self.flops
        )
    }
}

pub fn to_csv(rows: &[CostReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Extra parameters of an SGN block over the plain FFN block.
pub fn sgn_param_overhead(d_ff: u64, m: u64, count_ln_affine: bool) -> u64 {
    let ln = if count_ln_affine { 2 * d_ff } else { 0 };
    (d_ff + 1) * m + 2 * m * d_ff + 2 * d_ff + ln
}

/// `d_model -> d_ff -> d_model` block with biases.
pub fn ffn_baseline_params(d_model: u64, d_ff: u64) -> u64 {
    2 * d_model * d_ff + d_ff + d_model
}

/// Per-token FLOPs of the two dense projections.
pub fn ffn_baseline_flops(d_model: u64, d_ff: u64) -> u64 {
    4 * d_model * d_ff
}

/// Spline layer with `G + K` control points and 3 extra scalars per edge.
pub fn kan_params(d_in: u64, d_out: u64, grid: u64, order: u64) -> u64 {
    d_in * d_out * (grid + order + 3) + d_out
}

/// Variant that counts control points only.
pub fn kan_params_control_points_only(d_in: u64, d_out: u64, grid: u64, order: u64) -> u64 {
    d_in * d_out * (grid + order) + d_out
}

/// `7 d_in + d_in d_out [9K(G + 1.5K) + 2G - 2.5K + 3]`, kept in integers:
/// `9K(G + 1.5K) - 2.5K = 9KG + K(27K - 5)/2`, and `K(27K - 5)` is always even.
pub fn kan_flops(d_in: u64, d_out: u64, grid: u64, order: u64) -> u64 {
    let k = order;
    let per_edge = 9 * k * grid + k * (27 * k - 5) / 2 + 2 * grid + 3;
    7 * d_in + d_in * d_out * per_edge
}

/// Single layer with a coefficient head: `d_in M + M + 2 d_in + d_in d_out + d_out`.
pub fn sgn_single_layer_params(d_in: u64, d_out: u64, m: u64) -> u64 {
    d_in * m + m + 2 * d_in + d_in * d_out + d_out
}

pub fn mlp_layer_params(d_in: u64, d_out: u64) -> u64 {
    d_in * d_out + d_out
}

pub fn mlp_flops(d_in: u64, d_out: u64) -> u64 {
    2 * d_in * d_out + 5 * d_out
}

/// Spectral-overhead FLOPs per token: `2 d_ff m` projection, `4 d_ff m`
/// mixing, and the elementwise tally.
pub fn sgn_overhead_flops(d_ff: u64, m: u64) -> u64 {
    6 * d_ff * m + ELEMENTWISE_FLOPS_PER_CHANNEL * d_ff + TRIG_FLOPS_PER_FREQUENCY * m
}

/// SGN FLOPs under a convention. For [`Convention::PerToken`] `d_in` is the
/// hidden width `d_ff` and the result is the activation-side overhead
/// (`d_out` is not used).
pub fn sgn_flops(d_in: u64, d_out: u64, m: u64, convention: Convention) -> u64 {
    match convention {
        Convention::SingleLayer => 4 * d_in * m + 2 * d_in + 2 * d_in * d_out + 5 * d_in,
        Convention::PerToken => sgn_overhead_flops(d_in, m),
    }
}

/// String-keyed form used by front ends.
pub fn sgn_flops_named(d_in: u64, d_out: u64, m: u64, convention: &str) -> Result<u64> {
    Ok(sgn_flops(d_in, d_out, m, convention.parse()?))
}

pub fn sgn_cost(d_ff: u64, m: u64, count_ln_affine: bool) -> CostReport {
    CostReport {
        model: ModelKind::Sgn,
        convention: Convention::PerToken,
        d_in: d_ff,
        d_out: d_ff,
        m: Some(m),
        grid: None,
        order: None,
        params: sgn_param_overhead(d_ff, m, count_ln_affine),
        flops: sgn_overhead_flops(d_ff, m),
    }
}

pub fn kan_cost(d_in: u64, d_out: u64, grid: u64, order: u64) -> CostReport {
    CostReport {
        model: ModelKind::Kan,
        convention: Convention::SingleLayer,
        d_in,
        d_out,
        m: None,
        grid: Some(grid),
        order: Some(order),
        params: kan_params(d_in, d_out, grid, order),
        flops: kan_flops(d_in, d_out, grid, order),
    }
}

pub fn mlp_cost(d_in: u64, d_out: u64) -> CostReport {
    CostReport {
        model: ModelKind::Mlp,
        convention: Convention::SingleLayer,
        d_in,
        d_out,
        m: None,
        grid: None,
        order: None,
        params: mlp_layer_params(d_in, d_out),
        flops: mlp_flops(d_in, d_out),
    }
}

/// For every grid size: one SGN row (grid-free) and one `d_ff -> d_ff` KAN row.
pub fn grid_independence_report(d_ff: u64, m: u64, order: u64, grids: &[u64]) -> Result<Vec<CostReport>> {
    if grids.is_empty() {
        return Err(Error::Parameter("grid list is empty".into()));
    }
    let mut rows = Vec::with_capacity(2 * grids.len());
    for &g in grids {
        let mut sgn = sgn_cost(d_ff, m, true);
        sgn.grid = Some(g);
        rows.push(sgn);
        rows.push(kan_cost(d_ff, d_ff, g, order));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{BlockShape, MlpParams, ParamBlocks, SgnConfig, SgnParams, SplineLayerParams};
    use crate::numkit::Rng;
    use crate::Activation;

    #[test]
    fn overhead_examples() {
        assert_eq!(sgn_param_overhead(8, 2, false), 66);
        assert_eq!(sgn_param_overhead(1, 1, false), 6);
        assert_eq!(sgn_param_overhead(1, 1, true), 8);
    }

    #[test]
    fn baseline_examples() {
        assert_eq!(ffn_baseline_params(1, 1), 4);
        assert_eq!(ffn_baseline_params(2, 3), 17);
    }

    #[test]
    fn kan_examples() {
        assert_eq!(kan_params(4, 4, 5, 3), 180);
        assert_eq!(kan_params(1, 1, 1, 1), 6);
        assert_eq!(kan_params(3, 2, 10, 3) - kan_params(3, 2, 5, 3), 3 * 2 * 5);
        assert_eq!(kan_params_control_points_only(4, 4, 5, 3), 132);
    }

    #[test]
    fn kan_flops_matches_real_valued_formula() {
        for (d_in, d_out, g, k) in [(1, 1, 1, 1), (4, 4, 5, 3), (7, 2, 9, 2), (3, 5, 20, 4)] {
            let (di, dout, gg, kk) = (d_in as f64, d_out as f64, g as f64, k as f64);
            let want = 7.0 * di + di * dout * (9.0 * kk * (gg + 1.5 * kk) + 2.0 * gg - 2.5 * kk + 3.0);
            assert_eq!(kan_flops(d_in, d_out, g, k) as f64, want);
        }
    }

    #[test]
    fn flops_examples() {
        assert_eq!(sgn_flops(10, 5, 3, Convention::SingleLayer), 290);
        assert_eq!(mlp_flops(10, 5), 125);
        let o = sgn_flops(10, 0, 3, Convention::PerToken);
        assert_eq!(o, 180 + ELEMENTWISE_FLOPS_PER_CHANNEL * 10 + TRIG_FLOPS_PER_FREQUENCY * 3);
        assert!(sgn_flops_named(10, 5, 3, "bogus").is_err());
        assert_eq!(sgn_flops_named(10, 5, 3, "single_layer").unwrap(), 290);
    }

    #[test]
    fn overhead_is_affine_in_each_argument() {
        for d in 1..20u64 {
            for m in 1..20u64 {
                let f = |d, m| sgn_param_overhead(d, m, true) as i64;
                assert_eq!(f(d, m + 2) - 2 * f(d, m + 1) + f(d, m), 0);
                assert_eq!(f(d + 2, m) - 2 * f(d + 1, m) + f(d, m), 0);
            }
        }
    }

    #[test]
    fn formulas_match_constructed_layers() {
        let mut rng = Rng::new(99);
        for _ in 0..50 {
            let d_model = 1 + (rng.next_u64() % 6) as usize;
            let d_ff = 1 + (rng.next_u64() % 9) as usize;
            let m = 1 + (rng.next_u64() % 5) as usize;
            let affine = rng.next_u64() % 2 == 0;
            let mut cfg = SgnConfig::new(BlockShape::ffn(d_model, d_ff), m);
            cfg.ln_affine = affine;
            let sgn: SgnParams<f64> = SgnParams::init(&cfg, &mut rng).unwrap();
            let mlp: MlpParams<f64> = MlpParams::from_sgn(&sgn);
            assert_eq!(mlp.num_params() as u64, ffn_baseline_params(d_model as u64, d_ff as u64));
            assert_eq!(
                (sgn.num_params() - mlp.num_params()) as u64,
                sgn_param_overhead(d_ff as u64, m as u64, affine)
            );
            let (g, k) = (1 + (rng.next_u64() % 10) as usize, 1 + (rng.next_u64() % 4) as usize);
            let spline: SplineLayerParams<f64> = SplineLayerParams::init(d_model, d_ff, g, k, &mut rng).unwrap();
            assert_eq!(
                spline.num_params() as u64,
                kan_params(d_model as u64, d_ff as u64, g as u64, k as u64)
            );
        }
        let m: MlpParams<f64> = MlpParams::zeros(BlockShape::ffn(3, 3), Activation::Gelu);
        assert_eq!(m.num_params(), 3 * 3 * 2 + 3 + 3);
    }

    #[test]
    fn grid_report_shape() {
        let grids: Vec<u64> = (2..=20).step_by(2).collect();
        let rows = grid_independence_report(16, 4, 3, &grids).unwrap();
        let sgn: Vec<_> = rows.iter().filter(|r| r.model == ModelKind::Sgn).collect();
        let kan: Vec<_> = rows.iter().filter(|r| r.model == ModelKind::Kan).collect();
        assert!(sgn.windows(2).all(|w| w[0].params == w[1].params && w[0].flops == w[1].flops));
        assert!(kan.windows(2).all(|w| w[0].params < w[1].params && w[0].flops < w[1].flops));
        assert!(grid_independence_report(16, 4, 3, &[]).is_err());
        let csv = to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().count(), 1 + 2 * grids.len());
    }
}
