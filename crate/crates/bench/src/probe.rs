//! Per-band convergence of the residual spectrum during training.

use serde::{Deserialize, Serialize};
use sgn_core::numkit::dft_magnitude_at;
use sgn_core::training::{train_regression, TrainConfig};
use sgn_core::{Activation, Dataset, Error, Model, ParamBlocks, Result};

use crate::models::{mlp_width_for_budget, AnyModel, ModelSpec};
use crate::parallel::map_cells;
use crate::tasks::{three_tone, Target};

/// Reference magnitudes below this are treated as absent bands.
pub const MIN_BAND_MAGNITUDE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralProbeConfig {
    pub grid_points: usize,
    pub probe_every: usize,
    pub bands: Vec<usize>,
    pub threshold: f64,
}

impl Default for SpectralProbeConfig {
    fn default() -> Self {
        Self {
            grid_points: 1024,
            probe_every: 25,
            bands: vec![1, 8, 32],
            threshold: 0.1,
        }
    }
}

impl SpectralProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 || self.probe_every == 0 {
            return Err(Error::Parameter("probe needs grid_points >= 2 and probe_every >= 1".into()));
        }
        if let Some(&k) = self.bands.iter().find(|&&k| k > self.grid_points / 2) {
            return Err(Error::Parameter(format!(
                "band {k} is beyond the Nyquist bin {}",
                self.grid_points / 2
            )));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::Parameter(format!("threshold must be positive, got {}", self.threshold)));
        }
        Ok(())
    }

    /// Grid `x_j = j / n` on `[0, 1)`, the model input `2 x_j - 1`, and the
    /// target values.
    pub fn grid(&self, target: Target) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid_points;
        let inputs = (0..n).map(|j| 2.0 * (j as f64 / n as f64) - 1.0).collect();
        let ys = (0..n).map(|j| target(&[j as f64 / n as f64])).collect();
        (inputs, ys)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub band: usize,
    pub reference: f64,
    /// First probed epoch with relative residual below the threshold.
    pub converged_epoch: Option<usize>,
    pub final_error: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub model: String,
    pub params: usize,
    pub bands: Vec<BandResult>,
    /// `(epoch, relative residual per band)`; skipped bands are NaN.
    pub history: Vec<(usize, Vec<f64>)>,
    pub final_train_mse: f64,
}

impl ProbeReport {
    pub fn converged(&self, band: usize) -> Option<usize> {
        self.bands.iter().find(|b| b.band == band)?.converged_epoch
    }
}

/// Trains `model` on the uniform probe grid, recording
/// `e_k = |DFT[f - f_hat]_k| / |DFT[f]_k|` for every band every
/// `probe_every` epochs. The target is defined on `[0, 1)`; the model sees
/// inputs mapped to `[-1, 1)`.
pub fn spectral_bias_probe(
    model: &mut AnyModel,
    target: Target,
    probe: &SpectralProbeConfig,
    cfg: &TrainConfig,
) -> Result<ProbeReport> {
    probe.validate()?;
    let (inputs, ys) = probe.grid(target);
    let data = Dataset::from_scalar(&inputs, &ys)?;
    let mut bands = Vec::new();
    for &k in &probe.bands {
        let reference = dft_magnitude_at(&ys, k)?;
        let note = (reference < MIN_BAND_MAGNITUDE)
            .then(|| format!("band {k} skipped: target magnitude {reference:e} below {MIN_BAND_MAGNITUDE:e}"));
        bands.push(BandResult {
            band: k,
            reference,
            converged_epoch: None,
            final_error: None,
            note,
        });
    }
    let mut history = Vec::new();
    let mut observe = |epoch: usize, m: &AnyModel| -> Result<()> {
        if epoch % probe.probe_every != 0 && epoch != cfg.epochs {
            return Ok(());
        }
        let mut residual = Vec::with_capacity(ys.len());
        for (x, y) in inputs.iter().zip(&ys) {
            residual.push(y - m.predict(&[*x])?[0]);
        }
        let mut errs = Vec::with_capacity(bands.len());
        for b in bands.iter_mut() {
            if b.note.is_some() {
                errs.push(f64::NAN);
                continue;
            }
            let e = dft_magnitude_at(&residual, b.band)? / b.reference;
            b.final_error = Some(e);
            if b.converged_epoch.is_none() && e < probe.threshold {
                b.converged_epoch = Some(epoch);
            }
            errs.push(e);
        }
        history.push((epoch, errs));
        Ok(())
    };
    let report = train_regression(model, &data, &data, cfg, Some(&mut observe))?;
    Ok(ProbeReport {
        model: model.kind().to_string(),
        params: model.num_params(),
        bands,
        history,
        final_train_mse: report.final_train_mse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeExperimentConfig {
    pub probe: SpectralProbeConfig,
    /// The SGN side; the MLP-GELU side gets a matched budget.
    pub sgn: ModelSpec,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
}

impl Default for ProbeExperimentConfig {
    fn default() -> Self {
        Self {
            probe: SpectralProbeConfig::default(),
            sgn: ModelSpec::sgn(32, 32).with_sigma(100.0),
            train: TrainConfig {
                epochs: 1000,
                learning_rate: 1e-3,
                eval_every: 1000,
                ..TrainConfig::default()
            },
            seeds: (0..5).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRun {
    pub seed: u64,
    pub label: String,
    pub report: Option<ProbeReport>,
    pub status: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeExperimentReport {
    pub runs: Vec<ProbeRun>,
}

impl ProbeExperimentReport {
    pub fn converged(&self, label: &str, seed: u64, band: usize) -> Option<usize> {
        self.runs
            .iter()
            .find(|r| r.label == label && r.seed == seed)?
            .report
            .as_ref()?
            .converged(band)
    }

    /// `label,seed,params,band,reference,converged_epoch,final_error,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,seed,params,band,reference,converged_epoch,final_error,status\n");
        for r in &self.runs {
            match &r.report {
                Some(rep) => {
                    for b in &rep.bands {
                        let status = b.note.clone().unwrap_or_else(|| r.status.clone());
                        out.push_str(&format!(
                            "{},{},{},{},{:e},{},{},{}\n",
                            r.label,
                            r.seed,
                            rep.params,
                            b.band,
                            b.reference,
                            b.converged_epoch.map(|e| e.to_string()).unwrap_or_default(),
                            b.final_error.map(|e| format!("{e:e}")).unwrap_or_default(),
                            status.replace([',', '\n'], ";")
                        ));
                    }
                }
                None => out.push_str(&format!(
                    "{},{},,,,,,{}\n",
                    r.label,
                    r.seed,
                    r.status.replace([',', '\n'], ";")
                )),
            }
        }
        out
    }
}

/// `epoch a <= epoch b`, where never converging counts as infinitely late.
pub fn not_later(a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(x), Some(y)) => x <= y,
    }
}

/// SGN against a budget-matched GELU MLP on the three-tone target.
pub fn run_probe_experiment(cfg: &ProbeExperimentConfig) -> Result<ProbeExperimentReport> {
    cfg.probe.validate()?;
    cfg.train.validate()?;
    let budget = cfg.sgn.num_params(1, 1);
    let mlp = ModelSpec::mlp(mlp_width_for_budget(budget, 1, 1), Activation::Gelu);
    let mut cells = Vec::new();
    for &seed in &cfg.seeds {
        cells.push((seed, "sgn", cfg.sgn.clone()));
        cells.push((seed, "mlp_gelu", mlp.clone()));
    }
    let runs = map_cells(cells, |(seed, label, spec)| {
        let out = spec.build(1, 1, (-1.0, 1.0), seed).and_then(|mut m| {
            let train = TrainConfig {
                seed,
                ..cfg.train.clone()
            };
            spectral_bias_probe(&mut m, three_tone, &cfg.probe, &train)
        });
        match out {
            Ok(r) => ProbeRun {
                seed,
                label: label.into(),
                report: Some(r),
                status: "ok".into(),
            },
            Err(e) => ProbeRun {
                seed,
                label: label.into(),
                report: None,
                status: format!("failed: {e}"),
            },
        }
    });
    Ok(ProbeExperimentReport { runs })
}
