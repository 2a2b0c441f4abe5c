//! Extrapolating `x^2` beyond the training interval.

use serde::{Deserialize, Serialize};
use sgn_core::training::{train_regression, TrainConfig};
use sgn_core::{BlockShape, Dataset, Error, Mlp, ParamBlocks, Result, SgnConfig, Sgn, SpectralMode};

use crate::parallel::map_cells;
use crate::tasks::{square, Domain, Sampling, TaskSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtrapolationConfig {
    pub d_ff: usize,
    pub m: usize,
    pub sigma: f64,
    pub eps: f64,
    pub gate_bias: f64,
    pub train_domain: Domain,
    pub test_domain: Domain,
    pub n_train: usize,
    pub n_test: usize,
    /// Inputs are multiplied by this factor before reaching any model.
    pub input_scale: f64,
    pub learning_rate: f64,
    /// Epochs on the base branch alone before the spectral branch is enabled.
    pub base_epochs: usize,
    pub spectral_epochs: usize,
    pub seeds: Vec<u64>,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            d_ff: 32,
            m: 8,
            sigma: sgn_core::DEFAULT_SIGMA,
            eps: sgn_core::DEFAULT_EPS,
            gate_bias: sgn_core::DEFAULT_GATE_BIAS,
            train_domain: Domain::cube(1, -1.0, 1.0),
            test_domain: Domain::union(vec![vec![(-2.0, -1.0)], vec![(1.0, 2.0)]]),
            n_train: 256,
            n_test: 512,
            input_scale: 0.25,
            learning_rate: 1e-3,
            base_epochs: 2000,
            spectral_epochs: 1000,
            seeds: (0..5).collect(),
        }
    }
}

impl ExtrapolationConfig {
    pub fn task(&self) -> TaskSpec {
        TaskSpec {
            name: "square".into(),
            arity: 1,
            target: square,
            train_domain: self.train_domain.clone(),
            test_domain: self.test_domain.clone(),
            n_train: self.n_train,
            n_test: self.n_test,
            sampling: Sampling::UniformGrid,
        }
    }

    fn train_cfg(&self, epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            learning_rate: self.learning_rate,
            seed,
            eval_every: epochs,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_domain.boxes.iter().chain(&self.test_domain.boxes).any(|b| b.len() != 1) {
            return Err(Error::Parameter("extrapolation domains are one-dimensional".into()));
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return Err(Error::Parameter(format!("input_scale must be positive, got {}", self.input_scale)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Parameter("need at least one seed".into()));
        }
        self.task().validate()?;
        self.train_cfg(self.base_epochs.max(1), 0).validate()?;
        self.sgn_config(0).validate()
    }

    fn sgn_config(&self, seed: u64) -> SgnConfig {
        let mut cfg = SgnConfig::new(BlockShape { d_in: 1, d_ff: self.d_ff, d_out: 1 }, self.m);
        cfg.sigma = self.sigma;
        cfg.eps = self.eps;
        cfg.gate_bias_init = self.gate_bias;
        cfg.seed = seed;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationRow {
    pub seed: u64,
    pub variant: String,
    pub params: usize,
    pub train_mse: Option<f64>,
    pub extrapolation_mse: Option<f64>,
    pub status: String,
}

impl ExtrapolationRow {
    /// Extrapolation MSE over train MSE.
    pub fn ratio(&self) -> Option<f64> {
        Some(self.extrapolation_mse? / self.train_mse?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationReport {
    pub rows: Vec<ExtrapolationRow>,
}

impl ExtrapolationReport {
    pub fn row(&self, seed: u64, variant: &str) -> Option<&ExtrapolationRow> {
        self.rows.iter().find(|r| r.seed == seed && r.variant == variant)
    }

    pub fn seeds(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
        s.dedup();
        s
    }

    pub fn to_csv(&self) -> String {
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from("seed,variant,params,train_mse,extrapolation_mse,ratio,status\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.seed,
                r.variant,
                r.params,
                num(r.train_mse),
                num(r.extrapolation_mse),
                num(r.ratio()),
                r.status.replace([',', '\n'], ";")
            ));
        }
        out
    }
}

fn scaled(mut data: Dataset<f64>, s: f64) -> Dataset<f64> {
    for x in &mut data.inputs {
        x.iter_mut().for_each(|v| *v *= s);
    }
    data
}

fn row(seed: u64, variant: &str, params: usize, r: Result<(f64, f64)>) -> ExtrapolationRow {
    let (train_mse, extrapolation_mse, status) = match r {
        Ok((a, b)) => (Some(a), Some(b), "ok".to_string()),
        Err(e) => (None, None, format!("failed: {e}")),
    };
    ExtrapolationRow {
        seed,
        variant: variant.into(),
        params,
        train_mse,
        extrapolation_mse,
        status,
    }
}

/// Three variants per seed, all from the same initial draw:
///
/// * `mlp`: the base branch alone, trained for `base_epochs` and then
///   `spectral_epochs` more.
/// * `hybrid`: the SGN block, warm-started from the MLP after `base_epochs`
///   and trained jointly for `spectral_epochs` (homotopy continuation).
/// * `pure_spectral`: the block without its base branch, trained for the
///   same total number of epochs.
fn run_seed(cfg: &ExtrapolationConfig, seed: u64) -> Vec<ExtrapolationRow> {
    let total = cfg.base_epochs + cfg.spectral_epochs;
    let data = cfg.task().datasets(seed).map(|(tr, te)| {
        (scaled(tr, cfg.input_scale), scaled(te, cfg.input_scale))
    });
    let (train, test) = match data {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            return ["mlp", "hybrid", "pure_spectral"]
                .iter()
                .map(|v| row(seed, v, 0, Err(Error::Parameter(msg.clone()))))
                .collect();
        }
    };
    let mse = |r: &sgn_core::ExperimentReport| (r.final_train_mse, r.final_test_rmse * r.final_test_rmse);

    let mut rows = Vec::new();
    let mlp_params = 3 * cfg.d_ff + 1;
    // mlp and hybrid share the first stage
    let stage1 = Sgn::from_config(&cfg.sgn_config(seed)).and_then(|init| {
        let mut base = Mlp::from_sgn(&init);
        if cfg.base_epochs > 0 {
            train_regression(&mut base, &train, &test, &cfg.train_cfg(cfg.base_epochs, seed), None)?;
        }
        Ok((init, base))
    });
    match stage1 {
        Ok((init, base)) => {
            let mut mlp = base.clone();
            let r = if cfg.spectral_epochs > 0 {
                train_regression(&mut mlp, &train, &test, &cfg.train_cfg(cfg.spectral_epochs, seed), None)
                    .map(|r| mse(&r))
            } else {
                evaluated(&mlp, &train, &test)
            };
            rows.push(row(seed, "mlp", mlp_params, r));

            let mut hybrid = init;
            hybrid.w1 = base.w1;
            hybrid.b1 = base.b1;
            hybrid.w2 = base.w2;
            hybrid.b2 = base.b2;
            let params = hybrid.num_params();
            let r = if cfg.spectral_epochs > 0 {
                train_regression(&mut hybrid, &train, &test, &cfg.train_cfg(cfg.spectral_epochs, seed), None)
                    .map(|r| mse(&r))
            } else {
                evaluated(&hybrid, &train, &test)
            };
            rows.push(row(seed, "hybrid", params, r));
        }
        Err(e) => {
            let msg = e.to_string();
            rows.push(row(seed, "mlp", mlp_params, Err(Error::Parameter(msg.clone()))));
            rows.push(row(seed, "hybrid", 0, Err(Error::Parameter(msg))));
        }
    }

    let mut pure_cfg = cfg.sgn_config(seed);
    pure_cfg.mode = SpectralMode::PureSpectral;
    let pure = Sgn::from_config(&pure_cfg).and_then(|mut p| {
        let params = p.num_params();
        let r = train_regression(&mut p, &train, &test, &cfg.train_cfg(total.max(1), seed), None)?;
        Ok((params, mse(&r)))
    });
    match pure {
        Ok((params, m)) => rows.push(row(seed, "pure_spectral", params, Ok(m))),
        Err(e) => rows.push(row(seed, "pure_spectral", 0, Err(e))),
    }
    rows
}

fn evaluated<M: sgn_core::Model<f64>>(m: &M, train: &Dataset<f64>, test: &Dataset<f64>) -> Result<(f64, f64)> {
    Ok((
        sgn_core::training::batch_loss(m, train)?,
        sgn_core::training::batch_loss(m, test)?,
    ))
}

pub fn run_extrapolation_experiment(cfg: &ExtrapolationConfig) -> Result<ExtrapolationReport> {
    cfg.validate()?;
    let rows = map_cells(cfg.seeds.clone(), |seed| run_seed(cfg, seed));
    Ok(ExtrapolationReport {
        rows: rows.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_run_reports_three_variants_per_seed() {
        let cfg = ExtrapolationConfig {
            d_ff: 4,
            m: 2,
            n_train: 20,
            n_test: 20,
            base_epochs: 3,
            spectral_epochs: 2,
            seeds: vec![0, 1],
            ..ExtrapolationConfig::default()
        };
        let r = run_extrapolation_experiment(&cfg).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert!(r.rows.iter().all(|row| row.status == "ok"));
        assert_eq!(r.seeds(), vec![0, 1]);
        assert_eq!(r.row(0, "mlp").unwrap().params, 13);
        assert_eq!(r.to_csv().lines().count(), 7);
    }

    #[test]
    fn test_domain_lies_outside_train_interval() {
        let cfg = ExtrapolationConfig::default();
        let (_, test) = cfg.task().datasets(0).unwrap();
        assert!(test.inputs.iter().all(|x| x[0].abs() >= 1.0 && x[0].abs() <= 2.0));
    }

    #[test]
    fn rejects_two_dimensional_domain() {
        let cfg = ExtrapolationConfig {
            train_domain: Domain::cube(2, -1.0, 1.0),
            ..ExtrapolationConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
