//! Budget-matched fitting comparisons over the task registry.

use serde::{Deserialize, Serialize};
use sgn_core::training::{train_regression, TrainConfig};
use sgn_core::{Dataset, Error, Result};

use crate::models::{budgets_match, mlp_width_for_budget, spline_grid_for_budget, ModelSpec};
use crate::parallel::map_cells;
use crate::tasks::TaskSpec;

/// One model in a comparison. With `match_budget`, the hidden width of an
/// MLP or the grid of a spline layer is resized per task so its parameter
/// count tracks the first entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub label: String,
    pub spec: ModelSpec,
    #[serde(default)]
    pub match_budget: bool,
}

impl ModelEntry {
    pub fn fixed(label: &str, spec: ModelSpec) -> Self {
        Self {
            label: label.into(),
            spec,
            match_budget: false,
        }
    }

    pub fn matched(label: &str, spec: ModelSpec) -> Self {
        Self {
            label: label.into(),
            spec,
            match_budget: true,
        }
    }
}

/// Training protocol shared by every cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitProtocol {
    /// Optimizer settings; `seed` is replaced by the cell seed.
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Overrides the task's sample counts when set.
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    /// Fit standardized targets (train mean and deviation); RMSE is always
    /// reported in the original units.
    pub standardize: bool,
    /// Largest relative parameter-count gap allowed against the first model.
    pub budget_tolerance: f64,
}

impl Default for FitProtocol {
    fn default() -> Self {
        Self {
            train: TrainConfig {
                learning_rate: 1e-2,
                epochs: 1000,
                eval_every: 10,
                ..TrainConfig::default()
            },
            seeds: (0..5).collect(),
            n_train: Some(500),
            n_test: Some(500),
            standardize: true,
            budget_tolerance: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub model: String,
    pub task: String,
    pub seed: u64,
    pub params: usize,
    pub min_test_rmse: Option<f64>,
    pub final_test_rmse: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl FitReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,task,seed,params,min_test_rmse,final_test_rmse,status\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.model,
                r.task,
                r.seed,
                r.params,
                opt_num(r.min_test_rmse),
                opt_num(r.final_test_rmse),
                r.status.replace([',', '\n'], ";")
            ));
        }
        out
    }

    pub fn row(&self, model: &str, task: &str, seed: u64) -> Option<&FitRow> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.task == task && r.seed == seed)
    }

    /// Seeds on `task` where `a` reaches a minimum test RMSE no larger than
    /// `b`'s, and the number of seeds where both cells succeeded.
    pub fn wins(&self, a: &str, b: &str, task: &str) -> (usize, usize) {
        let mut wins = 0;
        let mut total = 0;
        for ra in self.rows.iter().filter(|r| r.model == a && r.task == task) {
            let Some(rb) = self.row(b, task, ra.seed) else { continue };
            if let (Some(x), Some(y)) = (ra.min_test_rmse, rb.min_test_rmse) {
                total += 1;
                if x <= y {
                    wins += 1;
                }
            }
        }
        (wins, total)
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.status != "ok").count()
    }
}

/// Input interval spanned by a task's training boxes.
pub fn input_span(task: &TaskSpec) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (a, b) in task.train_domain.boxes.iter().flatten() {
        lo = lo.min(*a);
        hi = hi.max(*b);
    }
    (lo, hi)
}

/// Concrete specs for a task, resized and checked against the first entry's
/// budget.
pub fn resolve_models(entries: &[ModelEntry], arity: usize, tolerance: f64) -> Result<Vec<(String, ModelSpec)>> {
    let Some(first) = entries.first() else {
        return Err(Error::Parameter("no models to compare".into()));
    };
    let budget = first.spec.num_params(arity, 1);
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let spec = match (&e.spec, e.match_budget) {
            (ModelSpec::Mlp { activation, .. }, true) => ModelSpec::Mlp {
                d_ff: mlp_width_for_budget(budget, arity, 1),
                activation: *activation,
            },
            (ModelSpec::Spline { order, .. }, true) => ModelSpec::Spline {
                grid: spline_grid_for_budget(budget, arity, 1, *order),
                order: *order,
            },
            (spec, _) => spec.clone(),
        };
        let p = spec.num_params(arity, 1);
        if !budgets_match(p, budget, tolerance) {
            return Err(Error::Parameter(format!(
                "model {} has {p} parameters against a budget of {budget} (tolerance {tolerance})",
                e.label
            )));
        }
        out.push((e.label.clone(), spec));
    }
    Ok(out)
}

/// Per-output mean and deviation of the training targets.
fn target_stats(data: &Dataset<f64>) -> (Vec<f64>, Vec<f64>) {
    let d = data.output_dim();
    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    for t in &data.targets {
        for (m, v) in mean.iter_mut().zip(t) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; d];
    for t in &data.targets {
        for ((s, v), m) in sd.iter_mut().zip(t).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let sd = sd
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, sd)
}

fn standardize(data: &mut Dataset<f64>, mean: &[f64], sd: &[f64]) {
    for t in &mut data.targets {
        for ((v, m), s) in t.iter_mut().zip(mean).zip(sd) {
            *v = (*v - m) / s;
        }
    }
}

/// Datasets for one `(task, seed)` cell under `protocol`, plus the factor
/// that converts RMSE back to target units.
pub fn cell_datasets(task: &TaskSpec, seed: u64, protocol: &FitProtocol) -> Result<(Dataset<f64>, Dataset<f64>, f64)> {
    let mut task = task.clone();
    if let Some(n) = protocol.n_train {
        task.n_train = n;
    }
    if let Some(n) = protocol.n_test {
        task.n_test = n;
    }
    let (mut train, mut test) = task.datasets(seed)?;
    let mut unit = 1.0;
    if protocol.standardize {
        let (mean, sd) = target_stats(&train);
        standardize(&mut train, &mean, &sd);
        standardize(&mut test, &mean, &sd);
        // single-output tasks only, so one factor suffices
        unit = sd[0];
    }
    Ok((train, test, unit))
}

struct Cell<'a> {
    label: String,
    spec: ModelSpec,
    task: &'a TaskSpec,
    seed: u64,
}

fn run_cell(cell: &Cell<'_>, protocol: &FitProtocol) -> FitRow {
    let params = cell.spec.num_params(cell.task.arity, 1);
    let outcome = (|| -> Result<(f64, f64)> {
        let (train, test, unit) = cell_datasets(cell.task, cell.seed, protocol)?;
        let mut model = cell.spec.build(cell.task.arity, 1, input_span(cell.task), cell.seed)?;
        let cfg = TrainConfig {
            seed: cell.seed,
            ..protocol.train.clone()
        };
        let r = train_regression(&mut model, &train, &test, &cfg, None)?;
        Ok((r.min_test_rmse * unit, r.final_test_rmse * unit))
    })();
    let (min, fin, status) = match outcome {
        Ok((a, b)) => (Some(a), Some(b), "ok".to_string()),
        Err(e) => (None, None, format!("failed: {e}")),
    };
    FitRow {
        model: cell.label.clone(),
        task: cell.task.name.clone(),
        seed: cell.seed,
        params,
        min_test_rmse: min,
        final_test_rmse: fin,
        status,
    }
}

/// Trains every model on every task for every protocol seed. A cell whose
/// training fails is reported with status `failed: ...`; only configuration
/// errors (unknown budgets, bad protocol) abort the suite.
pub fn run_fit_suite(models: &[ModelEntry], tasks: &[TaskSpec], protocol: &FitProtocol) -> Result<FitReport> {
    protocol.train.validate()?;
    if protocol.seeds.is_empty() {
        return Err(Error::Parameter("fit protocol needs at least one seed".into()));
    }
    let mut cells = Vec::new();
    for task in tasks {
        task.validate()?;
        if task.arity == 0 {
            return Err(Error::Parameter(format!("task {} has no inputs", task.name)));
        }
        for (label, spec) in resolve_models(models, task.arity, protocol.budget_tolerance)? {
            for &seed in &protocol.seeds {
                cells.push(Cell {
                    label: label.clone(),
                    spec: spec.clone(),
                    task,
                    seed,
                });
            }
        }
    }
    let rows = map_cells(cells, |c| run_cell(&c, protocol));
    Ok(FitReport { rows })
}

/// SGN against a budget-matched GELU MLP.
pub fn default_fit_models() -> Vec<ModelEntry> {
    vec![
        ModelEntry::fixed("sgn", ModelSpec::sgn(32, 16)),
        ModelEntry::matched("mlp_gelu", ModelSpec::mlp(1, sgn_core::Activation::Gelu)),
    ]
}

pub const DEFAULT_FIT_TASKS: [&str; 2] = ["high_freq_sum", "oscillating_decay"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::task_by_name;
    use sgn_core::Activation;

    fn quick() -> FitProtocol {
        FitProtocol {
            train: TrainConfig {
                epochs: 5,
                learning_rate: 1e-2,
                ..TrainConfig::default()
            },
            seeds: vec![0, 1],
            n_train: Some(40),
            n_test: Some(30),
            ..FitProtocol::default()
        }
    }

    #[test]
    fn matched_widths_are_within_budget() {
        let entries = vec![
            ModelEntry::fixed("sgn", ModelSpec::sgn(32, 16)),
            ModelEntry::matched("mlp", ModelSpec::mlp(1, Activation::Gelu)),
            ModelEntry::matched("spline", ModelSpec::Spline { grid: 1, order: 3 }),
        ];
        for arity in 1..=4 {
            let specs = resolve_models(&entries, arity, 0.1).unwrap();
            let budget = specs[0].1.num_params(arity, 1);
            for (_, s) in &specs {
                assert!(budgets_match(s.num_params(arity, 1), budget, 0.1));
            }
        }
    }

    #[test]
    fn unmatched_budget_is_rejected() {
        let entries = vec![
            ModelEntry::fixed("sgn", ModelSpec::sgn(32, 16)),
            ModelEntry::fixed("mlp", ModelSpec::mlp(4, Activation::Gelu)),
        ];
        assert!(resolve_models(&entries, 1, 0.1).is_err());
    }

    #[test]
    fn duplicate_models_give_identical_rows() {
        let spec = ModelSpec::sgn(4, 2);
        let entries = vec![ModelEntry::fixed("a", spec.clone()), ModelEntry::fixed("b", spec)];
        let task = task_by_name("oscillating_decay").unwrap();
        let r = run_fit_suite(&entries, &[task], &quick()).unwrap();
        assert_eq!(r.rows.len(), 4);
        for seed in [0, 1] {
            let a = r.row("a", "oscillating_decay", seed).unwrap();
            let b = r.row("b", "oscillating_decay", seed).unwrap();
            assert_eq!(a.min_test_rmse, b.min_test_rmse);
            assert_eq!(a.final_test_rmse, b.final_test_rmse);
        }
    }

    #[test]
    fn failing_cell_is_recorded() {
        let mut proto = quick();
        proto.train.learning_rate = 1e200;
        let entries = vec![ModelEntry::fixed("sgn", ModelSpec::sgn(4, 2))];
        let r = run_fit_suite(&entries, &[task_by_name("bessel").unwrap()], &proto).unwrap();
        assert_eq!(r.failures(), 2);
        assert!(r.to_csv().lines().nth(1).unwrap().contains("failed"));
    }

    #[test]
    fn standardized_rmse_is_in_target_units() {
        let task = task_by_name("high_freq_sum").unwrap();
        let proto = quick();
        let (train, _, unit) = cell_datasets(&task, 0, &proto).unwrap();
        let mean: f64 = train.targets.iter().map(|t| t[0]).sum::<f64>() / train.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!(unit > 1.0);
    }
}
