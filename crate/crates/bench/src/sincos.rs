//! Single-tone fitting over a wide interval and the resulting spectra.

use serde::{Deserialize, Serialize};
use sgn_core::numkit::dft_magnitudes;
use sgn_core::training::{train_regression, TrainConfig};
use sgn_core::{Activation, Dataset, Error, Model, ParamBlocks, Result};

use crate::models::ModelSpec;
use crate::parallel::map_cells;
use crate::tasks::{cosine, sine, Target};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SincosConfig {
    /// Hidden width of every network.
    pub width: usize,
    pub m: usize,
    pub sigma: f64,
    pub lo: f64,
    pub hi: f64,
    pub n_train: usize,
    pub grid_points: usize,
    pub spline_grid: usize,
    pub spline_order: usize,
    pub train: TrainConfig,
}

impl Default for SincosConfig {
    fn default() -> Self {
        Self {
            width: 64,
            m: 16,
            sigma: sgn_core::DEFAULT_SIGMA,
            lo: -20.0,
            hi: 20.0,
            n_train: 1000,
            grid_points: 2048,
            spline_grid: 64,
            spline_order: 3,
            train: TrainConfig {
                epochs: 1000,
                learning_rate: 1e-2,
                eval_every: 1000,
                ..TrainConfig::default()
            },
        }
    }
}

impl SincosConfig {
    pub fn models(&self) -> Vec<(&'static str, ModelSpec)> {
        vec![
            ("sgn", ModelSpec::sgn(self.width, self.m).with_sigma(self.sigma)),
            ("mlp_gelu", ModelSpec::mlp(self.width, Activation::Gelu)),
            ("mlp_relu", ModelSpec::mlp(self.width, Activation::Relu)),
            (
                "spline",
                ModelSpec::Spline {
                    grid: self.spline_grid,
                    order: self.spline_order,
                },
            ),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Parameter(format!("bad interval [{}, {}]", self.lo, self.hi)));
        }
        if self.n_train < 2 || self.grid_points < 2 {
            return Err(Error::Parameter("need at least 2 training and grid points".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SincosRun {
    pub target: String,
    pub model: String,
    pub params: usize,
    pub final_train_mse: Option<f64>,
    /// `sum_k |P_k - F_k|` over the one-sided magnitude spectra.
    pub spectrum_l1: Option<f64>,
    pub all_finite: bool,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SincosReport {
    pub runs: Vec<SincosRun>,
    /// Bin frequency spacing in cycles per unit input.
    pub bin_width: f64,
    /// `(target, model or "target", magnitudes)`.
    #[serde(skip)]
    pub spectra: Vec<(String, String, Vec<f64>)>,
}

impl SincosReport {
    pub fn run(&self, target: &str, model: &str) -> Option<&SincosRun> {
        self.runs.iter().find(|r| r.target == target && r.model == model)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("target,model,params,final_train_mse,spectrum_l1,all_finite,status\n");
        let num = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.target,
                r.model,
                r.params,
                num(r.final_train_mse),
                num(r.spectrum_l1),
                r.all_finite,
                r.status.replace([',', '\n'], ";")
            ));
        }
        out
    }

    /// Long format: `target,series,bin,frequency,magnitude`.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("target,series,bin,frequency,magnitude\n");
        for (target, series, mags) in &self.spectra {
            for (k, v) in mags.iter().enumerate() {
                out.push_str(&format!("{target},{series},{k},{:e},{v:e}\n", k as f64 * self.bin_width));
            }
        }
        out
    }
}

fn grid(lo: f64, hi: f64, n: usize, endpoint: bool) -> Vec<f64> {
    let div = if endpoint { n - 1 } else { n } as f64;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / div).collect()
}

struct Cell {
    target: &'static str,
    f: Target,
    model: &'static str,
    spec: ModelSpec,
}

fn run_cell(cell: &Cell, cfg: &SincosConfig, grid_x: &[f64], target_mag: &[f64]) -> (SincosRun, Option<Vec<f64>>) {
    let outcome = (|| -> Result<(usize, f64, Vec<f64>)> {
        let xs = grid(cfg.lo, cfg.hi, cfg.n_train, true);
        let ys: Vec<f64> = xs.iter().map(|&x| (cell.f)(&[x])).collect();
        let data = Dataset::from_scalar(&xs, &ys)?;
        let mut model = cell.spec.build(1, 1, (cfg.lo, cfg.hi), cfg.train.seed)?;
        let r = train_regression(&mut model, &data, &data, &cfg.train, None)?;
        let pred = grid_x
            .iter()
            .map(|&x| model.predict(&[x]).map(|y| y[0]))
            .collect::<Result<Vec<f64>>>()?;
        Ok((model.num_params(), r.final_train_mse, pred))
    })();
    let params = cell.spec.num_params(1, 1);
    match outcome {
        Ok((params, mse, pred)) => {
            let all_finite = pred.iter().all(|v| v.is_finite());
            let mag = if all_finite { dft_magnitudes(&pred).ok() } else { None };
            let l1 = mag
                .as_ref()
                .map(|m| m.iter().zip(target_mag).map(|(a, b)| (a - b).abs()).sum());
            let status = if all_finite { "ok" } else { "failed: non-finite predictions" };
            (
                SincosRun {
                    target: cell.target.into(),
                    model: cell.model.into(),
                    params,
                    final_train_mse: Some(mse),
                    spectrum_l1: l1,
                    all_finite,
                    status: status.into(),
                },
                mag,
            )
        }
        Err(e) => (
            SincosRun {
                target: cell.target.into(),
                model: cell.model.into(),
                params,
                final_train_mse: None,
                spectrum_l1: None,
                all_finite: false,
                status: format!("failed: {e}"),
            },
            None,
        ),
    }
}

/// Fits `sin x` and `cos x` on `[lo, hi]` with every model, then compares the
/// DFT magnitudes of the predictions on a uniform grid (right endpoint
/// excluded, so the grid is one period of the periodic extension) with the
/// target's.
pub fn run_sincos_experiment(cfg: &SincosConfig) -> Result<SincosReport> {
    cfg.validate()?;
    let grid_x = grid(cfg.lo, cfg.hi, cfg.grid_points, false);
    let targets: [(&'static str, Target); 2] = [("sin", sine), ("cos", cosine)];
    let mut target_mags = Vec::new();
    let mut cells = Vec::new();
    for (name, f) in targets {
        let y: Vec<f64> = grid_x.iter().map(|&x| f(&[x])).collect();
        target_mags.push((name, dft_magnitudes(&y)?));
        for (model, spec) in cfg.models() {
            cells.push(Cell {
                target: name,
                f,
                model,
                spec,
            });
        }
    }
    let results = map_cells(cells, |c| {
        let mag = &target_mags.iter().find(|(n, _)| *n == c.target).expect("target spectrum").1;
        run_cell(&c, cfg, &grid_x, mag)
    });
    let mut spectra = Vec::new();
    for (name, mag) in &target_mags {
        spectra.push((name.to_string(), "target".to_string(), mag.clone()));
    }
    let mut runs = Vec::new();
    for (run, mag) in results {
        if let Some(mag) = mag {
            spectra.push((run.target.clone(), run.model.clone(), mag));
        }
        runs.push(run);
    }
    Ok(SincosReport {
        runs,
        bin_width: 1.0 / (cfg.hi - cfg.lo),
        spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_spectrum_peaks_at_nearest_bin() {
        let cfg = SincosConfig::default();
        let x = grid(cfg.lo, cfg.hi, cfg.grid_points, false);
        let y: Vec<f64> = x.iter().map(|&v| v.sin()).collect();
        let mag = dft_magnitudes(&y).unwrap();
        let peak = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
        let want = (40.0 / std::f64::consts::TAU).round() as usize;
        assert_eq!(peak, want);
    }

    #[test]
    fn short_run_is_finite() {
        let cfg = SincosConfig {
            n_train: 50,
            grid_points: 64,
            width: 4,
            m: 2,
            spline_grid: 4,
            train: TrainConfig {
                epochs: 3,
                ..TrainConfig::default()
            },
            ..SincosConfig::default()
        };
        let r = run_sincos_experiment(&cfg).unwrap();
        assert_eq!(r.runs.len(), 8);
        assert!(r.runs.iter().all(|run| run.all_finite && run.status == "ok"));
        assert_eq!(r.spectra.len(), 10);
        assert!(r.spectrum_csv().lines().count() > 10 * 33);
    }
}
