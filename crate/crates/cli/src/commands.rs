use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sgn_bench::ablation::{run_gate_ablation, GateAblationConfig};
use sgn_bench::extrapolation::{run_extrapolation_experiment, ExtrapolationConfig};
use sgn_bench::fit::{default_fit_models, run_fit_suite, FitProtocol, FitReport, ModelEntry, DEFAULT_FIT_TASKS};
use sgn_bench::models::ModelSpec;
use sgn_bench::probe::{not_later, run_probe_experiment, ProbeExperimentConfig};
use sgn_bench::sincos::{run_sincos_experiment, SincosConfig};
use sgn_bench::studies::{
    basis_containment, gradcheck_study, homotopy_study, kernel_study, GradCheckStudyConfig, HomotopyStudyConfig,
    KernelStudyConfig,
};
use sgn_bench::tasks::{task_by_name, TaskOverride, TaskSpec};
use sgn_core::activations::{derive_alpha_opt_with, ALPHA_QUADRATURE_N, ALPHA_RANGE};
use sgn_core::complexity::{self, Convention};
use sgn_core::training::TrainConfig;
use sgn_core::{Activation, BlockShape, Mlp, ParamBlocks, Rng, Sgn, SgnConfig, Spline};

use crate::args::{BlockArgs, Cli, Command, TrainArgs};
use crate::output::{Check, Output};
use crate::CliError;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Seeds `base, base+1, ...`; without either flag the configured list stays.
fn seed_list(current: &[u64], seed: Option<u64>, count: Option<usize>) -> Result<Vec<u64>, CliError> {
    if count == Some(0) {
        return Err(usage("--seeds must be at least 1"));
    }
    if seed.is_none() && count.is_none() {
        return Ok(current.to_vec());
    }
    let base = seed.unwrap_or_else(|| current.first().copied().unwrap_or(0));
    let n = count.unwrap_or(current.len().max(1)) as u64;
    Ok((base..base + n).collect())
}

fn apply_block(spec: &mut ModelSpec, b: &BlockArgs) -> Result<(), CliError> {
    let given = b.d_ff.is_some() || b.m.is_some() || b.sigma.is_some() || b.eps.is_some() || b.gate_bias.is_some();
    match spec {
        ModelSpec::Sgn {
            d_ff,
            m,
            sigma,
            eps,
            gate_bias,
            ..
        } => {
            if let Some(v) = b.d_ff {
                *d_ff = v;
            }
            if let Some(v) = b.m {
                *m = v;
            }
            if let Some(v) = b.sigma {
                *sigma = v;
            }
            if let Some(v) = b.eps {
                *eps = v;
            }
            if let Some(v) = b.gate_bias {
                *gate_bias = v;
            }
            Ok(())
        }
        _ if given => Err(usage("block flags need an sgn model as the first entry")),
        _ => Ok(()),
    }
}

fn apply_train(cfg: &mut TrainConfig, t: &TrainArgs) {
    if let Some(e) = t.epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = t.lr {
        cfg.learning_rate = lr;
    }
}

/// Checks an SGN spec by building its config.
fn validate_spec(spec: &ModelSpec) -> Result<(), CliError> {
    if let ModelSpec::Sgn {
        d_ff,
        m,
        sigma,
        eps,
        gate_bias,
        mode,
        activation,
    } = *spec
    {
        let mut cfg = SgnConfig::new(BlockShape::ffn(1, d_ff), m);
        cfg.sigma = sigma;
        cfg.eps = eps;
        cfg.gate_bias_init = gate_bias;
        cfg.mode = mode;
        cfg.activation = activation;
        cfg.validate().map_err(usage)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopyCommandConfig {
    pub study: HomotopyStudyConfig,
    pub containment_gate_bias: f64,
    pub containment_inputs: usize,
    pub containment_tolerance: f64,
}

impl Default for HomotopyCommandConfig {
    fn default() -> Self {
        Self {
            study: HomotopyStudyConfig::default(),
            containment_gate_bias: 12.0,
            containment_inputs: 200,
            containment_tolerance: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeriveSigmaConfig {
    pub n: usize,
    pub range: f64,
    pub expected_alpha: f64,
    pub alpha_tolerance: f64,
    /// Largest change in alpha allowed when `n` doubles.
    pub convergence_tolerance: f64,
}

impl Default for DeriveSigmaConfig {
    fn default() -> Self {
        Self {
            n: ALPHA_QUADRATURE_N,
            range: ALPHA_RANGE,
            expected_alpha: sgn_core::DEFAULT_SIGMA,
            alpha_tolerance: 0.15,
            convergence_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComplexityConfig {
    pub d_model: usize,
    pub d_ff: usize,
    pub m: usize,
    pub grids: Vec<usize>,
    pub order: usize,
    /// Random small shapes whose constructed layers are counted.
    pub enumerated_shapes: usize,
}

impl Default for ComplexityConfig {
    fn default() -> Self {
        Self {
            d_model: 768,
            d_ff: 3072,
            m: 64,
            grids: (1..=10).map(|g| 2 * g).collect(),
            order: 3,
            enumerated_shapes: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitCommandConfig {
    /// The first entry sets the parameter budget.
    pub models: Vec<ModelEntry>,
    pub tasks: Vec<String>,
    pub task_overrides: Vec<TaskOverride>,
    pub protocol: FitProtocol,
}

impl Default for FitCommandConfig {
    fn default() -> Self {
        Self {
            models: default_fit_models(),
            tasks: DEFAULT_FIT_TASKS.iter().map(|s| s.to_string()).collect(),
            task_overrides: Vec::new(),
            protocol: FitProtocol::default(),
        }
    }
}

impl FitCommandConfig {
    fn resolve_tasks(&self) -> Result<Vec<TaskSpec>, CliError> {
        let mut tasks = self
            .tasks
            .iter()
            .map(|t| task_by_name(t).map_err(usage))
            .collect::<Result<Vec<_>, _>>()?;
        for o in &self.task_overrides {
            let Some(t) = tasks.iter_mut().find(|t| t.name == o.name) else {
                return Err(usage(format!("override for task {:?} which is not selected", o.name)));
            };
            t.apply(o).map_err(usage)?;
        }
        Ok(tasks)
    }
}

pub(crate) enum Plan {
    Gradcheck(GradCheckStudyConfig),
    Homotopy(HomotopyCommandConfig),
    Kernel(KernelStudyConfig),
    DeriveSigma(DeriveSigmaConfig),
    Complexity(ComplexityConfig),
    Fit(FitCommandConfig, Vec<TaskSpec>),
    Sincos(SincosConfig),
    Extrapolate(ExtrapolationConfig),
    Probe(ProbeExperimentConfig),
    GateAblation(GateAblationConfig),
}

/// Resolves defaults, the config file and flags, and validates the result.
/// Every error here is a usage error, raised before anything is written.
pub(crate) fn plan(cli: &Cli) -> Result<Plan, CliError> {
    let file = cli.common.config.as_deref();
    let seed = cli.common.seed;
    Ok(match &cli.command {
        Command::Gradcheck(a) => {
            let mut c: GradCheckStudyConfig = load(file)?;
            if let Some(v) = a.instances {
                c.instances = v;
            }
            if let Some(v) = a.tolerance {
                c.tolerance = v;
            }
            if c.instances == 0 || c.samples == 0 || c.max_d_model == 0 || c.max_d_ff == 0 || c.max_m == 0 {
                return Err(usage("gradcheck sizes must be positive"));
            }
            if !(c.tolerance > 0.0) {
                return Err(usage("--tolerance must be positive"));
            }
            Plan::Gradcheck(c)
        }
        Command::Homotopy(a) => {
            let mut c: HomotopyCommandConfig = load(file)?;
            let s = &mut c.study;
            if let Some(v) = a.d_model {
                s.d_model = v;
            }
            if let Some(v) = a.block.d_ff {
                s.d_ff = v;
            }
            if let Some(v) = a.block.m {
                s.m = v;
            }
            if let Some(v) = a.block.sigma {
                s.sigma = v;
            }
            if let Some(v) = a.block.eps {
                s.eps = v;
            }
            if let Some(v) = a.block.gate_bias {
                s.gate_bias = v;
            }
            if let Some(v) = a.instances {
                s.instances = v;
            }
            let mut sc = SgnConfig::new(BlockShape::ffn(s.d_model, s.d_ff), s.m);
            sc.sigma = s.sigma;
            sc.eps = s.eps;
            sc.gate_bias_init = s.gate_bias;
            sc.validate().map_err(usage)?;
            if s.eps == 0.0 || s.instances == 0 || s.gate_biases.is_empty() || c.containment_inputs == 0 {
                return Err(usage("homotopy study needs eps > 0, instances, gate biases and containment inputs"));
            }
            Plan::Homotopy(c)
        }
        Command::Kernel(a) => {
            let mut c: KernelStudyConfig = load(file)?;
            if let Some(v) = a.sigma {
                c.sigma_k = v;
            }
            if let Some(v) = &a.m {
                c.budgets = v.clone();
            }
            if let Some(v) = a.draws {
                c.seeds = v;
            }
            if !(c.sigma_k > 0.0) || c.seeds < 2 || c.grid_points < 2 || c.budgets.is_empty() || c.budgets.contains(&0) {
                return Err(usage("kernel study needs sigma > 0, >= 2 draws, >= 2 grid points and positive budgets"));
            }
            Plan::Kernel(c)
        }
        Command::DeriveSigma(a) => {
            let mut c: DeriveSigmaConfig = load(file)?;
            if let Some(v) = a.n {
                c.n = v;
            }
            if let Some(v) = a.range {
                c.range = v;
            }
            if c.n < 2 || c.n % 2 != 0 {
                return Err(usage("--n must be an even number of subintervals"));
            }
            if !(c.range > 0.0) {
                return Err(usage("--range must be positive"));
            }
            Plan::DeriveSigma(c)
        }
        Command::Complexity(a) => {
            let mut c: ComplexityConfig = load(file)?;
            if let Some(v) = a.d_model {
                c.d_model = v;
            }
            if let Some(v) = a.d_ff {
                c.d_ff = v;
            }
            if let Some(v) = a.m {
                c.m = v;
            }
            if let Some(v) = &a.grid {
                c.grids = v.clone();
            }
            if let Some(v) = a.order {
                c.order = v;
            }
            if c.d_model == 0 || c.d_ff == 0 || c.m == 0 || c.order == 0 || c.grids.is_empty() || c.grids.contains(&0) {
                return Err(usage("complexity sizes and grids must be positive"));
            }
            Plan::Complexity(c)
        }
        Command::Fit(a) => {
            let mut c: FitCommandConfig = load(file)?;
            if c.models.is_empty() {
                return Err(usage("fit needs at least one model"));
            }
            apply_block(&mut c.models[0].spec, &a.block)?;
            apply_train(&mut c.protocol.train, &a.train);
            if let Some(t) = &a.tasks {
                c.tasks = t.clone();
            }
            c.protocol.seeds = seed_list(&c.protocol.seeds, seed, a.seeds)?;
            c.protocol.train.validate().map_err(usage)?;
            for e in &c.models {
                validate_spec(&e.spec)?;
            }
            let tasks = c.resolve_tasks()?;
            for t in &tasks {
                sgn_bench::fit::resolve_models(&c.models, t.arity, c.protocol.budget_tolerance).map_err(usage)?;
            }
            Plan::Fit(c, tasks)
        }
        Command::Sincos(a) => {
            let mut c: SincosConfig = load(file)?;
            if let Some(v) = a.block.d_ff {
                c.width = v;
            }
            if let Some(v) = a.block.m {
                c.m = v;
            }
            if let Some(v) = a.block.sigma {
                c.sigma = v;
            }
            if a.block.eps.is_some() || a.block.gate_bias.is_some() {
                return Err(usage("sincos uses the default eps and gate bias"));
            }
            apply_train(&mut c.train, &a.train);
            if let Some(s) = seed {
                c.train.seed = s;
            }
            c.validate().map_err(usage)?;
            validate_spec(&c.models()[0].1)?;
            Plan::Sincos(c)
        }
        Command::Extrapolate(a) => {
            let mut c: ExtrapolationConfig = load(file)?;
            let b = &a.block;
            if let Some(v) = b.d_ff {
                c.d_ff = v;
            }
            if let Some(v) = b.m {
                c.m = v;
            }
            if let Some(v) = b.sigma {
                c.sigma = v;
            }
            if let Some(v) = b.eps {
                c.eps = v;
            }
            if let Some(v) = b.gate_bias {
                c.gate_bias = v;
            }
            if let Some(v) = a.train.epochs {
                c.spectral_epochs = v;
            }
            if let Some(v) = a.train.lr {
                c.learning_rate = v;
            }
            if let Some(v) = a.base_epochs {
                c.base_epochs = v;
            }
            c.seeds = seed_list(&c.seeds, seed, a.seeds)?;
            c.validate().map_err(usage)?;
            Plan::Extrapolate(c)
        }
        Command::Probe(a) => {
            let mut c: ProbeExperimentConfig = load(file)?;
            apply_block(&mut c.sgn, &a.block)?;
            apply_train(&mut c.train, &a.train);
            c.seeds = seed_list(&c.seeds, seed, a.seeds)?;
            c.probe.validate().map_err(usage)?;
            c.train.validate().map_err(usage)?;
            validate_spec(&c.sgn)?;
            if !matches!(c.sgn, ModelSpec::Sgn { .. }) || c.seeds.is_empty() {
                return Err(usage("probe needs an sgn model and at least one seed"));
            }
            Plan::Probe(c)
        }
        Command::GateAblation(a) => {
            let mut c: GateAblationConfig = load(file)?;
            apply_block(&mut c.sgn, &a.block)?;
            apply_train(&mut c.protocol.train, &a.train);
            if let Some(t) = &a.tasks {
                c.tasks = t.clone();
            }
            c.protocol.seeds = seed_list(&c.protocol.seeds, seed, a.seeds)?;
            c.protocol.train.validate().map_err(usage)?;
            validate_spec(&c.sgn)?;
            if !matches!(c.sgn, ModelSpec::Sgn { .. }) {
                return Err(usage("gate ablation needs an sgn model"));
            }
            for t in &c.tasks {
                task_by_name(t).map_err(usage)?;
            }
            if let Some(t) = a.tasks.as_ref() {
                c.compared_tasks.retain(|x| t.contains(x));
            }
            if let Some(t) = c.compared_tasks.iter().find(|t| !c.tasks.contains(t)) {
                return Err(usage(format!("compared task {t:?} is not in the task list")));
            }
            Plan::GateAblation(c)
        }
    })
}

fn majority(wins: usize, total: usize) -> bool {
    total > 0 && 2 * wins > total
}

fn fit_checks(report: &FitReport, reference: &str, rivals: &[&str], tasks: &[String]) -> Vec<Check> {
    let mut checks = vec![Check::new(
        "cells_trained",
        report.failures() == 0,
        format!("{} of {} cells failed", report.failures(), report.rows.len()),
    )];
    for task in tasks {
        for rival in rivals {
            let (w, n) = report.wins(reference, rival, task);
            checks.push(Check::new(
                &format!("{reference}_le_{rival}_{task}"),
                majority(w, n),
                format!("{reference} min test RMSE <= {rival} on {w} of {n} seeds"),
            ));
        }
    }
    checks
}

#[derive(Serialize)]
struct EnumeratedCount {
    d_model: usize,
    d_ff: usize,
    m: usize,
    ln_affine: bool,
    grid: usize,
    order: usize,
    ffn_formula: u64,
    ffn_enumerated: u64,
    sgn_overhead_formula: u64,
    sgn_overhead_enumerated: u64,
    kan_formula: u64,
    kan_enumerated: u64,
}

impl EnumeratedCount {
    fn exact(&self) -> bool {
        self.ffn_formula == self.ffn_enumerated
            && self.sgn_overhead_formula == self.sgn_overhead_enumerated
            && self.kan_formula == self.kan_enumerated
    }
}

/// Builds layers of random small shapes and counts their parameters.
fn enumerate_counts(seed: u64, shapes: usize) -> Result<Vec<EnumeratedCount>, CliError> {
    let mut rng = Rng::new(seed);
    fn pick(rng: &mut Rng, n: u64) -> usize {
        1 + (rng.next_u64() % n) as usize
    }
    let mut rows = Vec::with_capacity(shapes);
    for _ in 0..shapes {
        let (d_model, d_ff, m) = (pick(&mut rng, 8), pick(&mut rng, 12), pick(&mut rng, 6));
        let ln_affine = pick(&mut rng, 2) == 1;
        let (grid, order) = (pick(&mut rng, 20), pick(&mut rng, 4));
        let mut cfg = SgnConfig::new(BlockShape::ffn(d_model, d_ff), m);
        cfg.ln_affine = ln_affine;
        cfg.seed = rng.next_u64();
        let sgn = Sgn::from_config(&cfg).map_err(runtime)?;
        let mlp = Mlp::from_sgn(&sgn);
        let spline = Spline::init(d_model, d_ff, grid, order, &mut rng).map_err(runtime)?;
        let (d, f) = (d_model as u64, d_ff as u64);
        rows.push(EnumeratedCount {
            d_model,
            d_ff,
            m,
            ln_affine,
            grid,
            order,
            ffn_formula: complexity::ffn_baseline_params(d, f),
            ffn_enumerated: mlp.num_params() as u64,
            sgn_overhead_formula: complexity::sgn_param_overhead(f, m as u64, ln_affine),
            sgn_overhead_enumerated: (sgn.num_params() - mlp.num_params()) as u64,
            kan_formula: complexity::kan_params(d, f, grid as u64, order as u64),
            kan_enumerated: spline.num_params() as u64,
        });
    }
    Ok(rows)
}

#[derive(Serialize)]
struct DeriveSigmaReport {
    #[serde(rename = "I1")]
    i1: f64,
    #[serde(rename = "I2")]
    i2: f64,
    alpha: f64,
    n: usize,
    range: f64,
    alpha_doubled_n: f64,
    delta_alpha: f64,
    expected_alpha: f64,
    reference_i1: f64,
    reference_i2: f64,
}

impl Plan {
    pub(crate) fn echo(&self) -> serde_json::Value {
        let v = match self {
            Self::Gradcheck(c) => serde_json::to_value(c),
            Self::Homotopy(c) => serde_json::to_value(c),
            Self::Kernel(c) => serde_json::to_value(c),
            Self::DeriveSigma(c) => serde_json::to_value(c),
            Self::Complexity(c) => serde_json::to_value(c),
            Self::Fit(c, _) => serde_json::to_value(c),
            Self::Sincos(c) => serde_json::to_value(c),
            Self::Extrapolate(c) => serde_json::to_value(c),
            Self::Probe(c) => serde_json::to_value(c),
            Self::GateAblation(c) => serde_json::to_value(c),
        };
        v.unwrap_or(serde_json::Value::Null)
    }

    pub(crate) fn run(&self, seed: u64, out: &mut Output) -> Result<Vec<Check>, CliError> {
        match self {
            Self::Gradcheck(c) => {
                let s = gradcheck_study(seed, c).map_err(runtime)?;
                let mut csv = String::from("instance,d_model,d_ff,m,mode,num_params,max_rel_error,worst_block,passed\n");
                for (i, r) in s.instances.iter().enumerate() {
                    csv.push_str(&format!(
                        "{i},{},{},{},{},{},{:e},{},{}\n",
                        r.d_model, r.d_ff, r.m, r.mode, r.report.num_params, r.report.max_rel_error,
                        r.report.worst_block, r.report.passed
                    ));
                }
                out.json("gradcheck.json", &s)?;
                out.table("gradcheck_instances", &csv, &s.instances)?;
                Ok(vec![Check::new(
                    "max_rel_error",
                    s.passed,
                    format!("{:e} over {} blocks (tolerance {:e})", s.max_rel_error, s.instances.len(), s.tolerance),
                )])
            }
            Self::Homotopy(c) => {
                let s = homotopy_study(seed, &c.study).map_err(runtime)?;
                let b = basis_containment(seed, c.containment_gate_bias, c.containment_inputs).map_err(runtime)?;
                let mut csv = String::from("instance,base_grad_deviation_ratio,frequency_grad_ratio,gate_grad_ratio\n");
                for (i, r) in s.scaling.iter().enumerate() {
                    csv.push_str(&format!(
                        "{i},{:e},{:e},{:e}\n",
                        r.base_grad_deviation_ratio, r.frequency_grad_ratio, r.gate_grad_ratio
                    ));
                }
                out.json("homotopy.json", &serde_json::json!({ "study": s, "containment": b }))?;
                out.table("gradient_scaling", &csv, &s.scaling)?;
                Ok(vec![
                    Check::new(
                        "zero_projection_is_mlp",
                        s.bitwise_identical == s.identity_inputs,
                        format!("{} of {} outputs bitwise identical", s.bitwise_identical, s.identity_inputs),
                    ),
                    Check::new(
                        "deviation_linear_in_eps",
                        s.value_ratio_max_error < 1e-10,
                        format!("worst |ratio - 2| = {:e}", s.value_ratio_max_error),
                    ),
                    Check::new(
                        "gradients_halve_with_eps",
                        s.ratios_within(1.8, 2.2),
                        format!("{} instances, ratios within [1.8, 2.2]", s.scaling.len()),
                    ),
                    Check::new(
                        "projection_gradient_tracks_gate",
                        s.gate_scaling_within(0.2),
                        format!("normalized {:?}", s.gate_bias_normalized),
                    ),
                    Check::new(
                        "basis_containment",
                        b.relative_error < c.containment_tolerance,
                        format!("relative error {:e} at gate bias {}", b.relative_error, b.gate_bias),
                    ),
                ])
            }
            Self::Kernel(c) => {
                let s = kernel_study(seed, c).map_err(runtime)?;
                out.json("kernel.json", &s)?;
                out.table("kernel", &s.to_csv(), &s.budgets)?;
                let mut checks = Vec::new();
                if let Some(last) = s.budgets.iter().max_by_key(|b| b.m) {
                    checks.push(Check::new(
                        "sup_error_at_largest_m",
                        last.mean_sup_error < 0.03,
                        format!("m={}: mean sup error {:e}", last.m, last.mean_sup_error),
                    ));
                    let exact = (-0.5 / (c.sigma_k * c.sigma_k)).exp();
                    checks.push(Check::new(
                        "mean_estimate_at_distance_one",
                        (last.mean_estimate_at_one - exact).abs() <= 0.02,
                        format!("{:.6} against {exact:.6}", last.mean_estimate_at_one),
                    ));
                }
                for b in &s.budgets {
                    if let Some(r) = s.ratio_16x(b.m) {
                        checks.push(Check::new(
                            &format!("ratio_m{}_vs_m{}", b.m, 16 * b.m),
                            (2.5..=6.0).contains(&r),
                            format!("{r:.4}"),
                        ));
                    }
                }
                let mut sorted: Vec<_> = s.budgets.iter().collect();
                sorted.sort_by_key(|b| b.m);
                let monotone = sorted
                    .windows(2)
                    .all(|w| w[1].mean_sup_error <= w[0].mean_sup_error + w[0].std_error.max(w[1].std_error));
                checks.push(Check::new("error_decreases_in_m", monotone, "within one standard error"));
                Ok(checks)
            }
            Self::DeriveSigma(c) => {
                let d = derive_alpha_opt_with(c.n, c.range).map_err(runtime)?;
                let d2 = derive_alpha_opt_with(2 * c.n, c.range).map_err(runtime)?;
                let finite = [d.i1, d.i2, d.alpha, d2.alpha].iter().all(|v| v.is_finite());
                if !finite {
                    return Err(runtime(format!("quadrature produced non-finite values: {d:?}")));
                }
                let report = DeriveSigmaReport {
                    i1: d.i1,
                    i2: d.i2,
                    alpha: d.alpha,
                    n: d.n,
                    range: d.range,
                    alpha_doubled_n: d2.alpha,
                    delta_alpha: (d2.alpha - d.alpha).abs(),
                    expected_alpha: c.expected_alpha,
                    reference_i1: 0.168,
                    reference_i2: 0.062,
                };
                out.json("derive_sigma.json", &report)?;
                Ok(vec![
                    Check::new(
                        "alpha_near_expected",
                        (d.alpha - c.expected_alpha).abs() <= c.alpha_tolerance,
                        format!(
                            "I1={:.6} I2={:.6} alpha={:.6} (expected {} +/- {}; reference I1=0.168 I2=0.062)",
                            d.i1, d.i2, d.alpha, c.expected_alpha, c.alpha_tolerance
                        ),
                    ),
                    Check::new(
                        "quadrature_converged",
                        report.delta_alpha < c.convergence_tolerance,
                        format!("|alpha(2n) - alpha(n)| = {:e}", report.delta_alpha),
                    ),
                ])
            }
            Self::Complexity(c) => {
                let grids: Vec<u64> = c.grids.iter().map(|&g| g as u64).collect();
                let rows = complexity::grid_independence_report(c.d_ff as u64, c.m as u64, c.order as u64, &grids)
                    .map_err(runtime)?;
                out.table("complexity", &complexity::to_csv(&rows), &rows)?;
                let (d, f, m) = (c.d_model as u64, c.d_ff as u64, c.m as u64);
                let block = serde_json::json!({
                    "d_model": d,
                    "d_ff": f,
                    "m": m,
                    "ffn_params": complexity::ffn_baseline_params(d, f),
                    "sgn_param_overhead": complexity::sgn_param_overhead(f, m, false),
                    "sgn_param_overhead_with_ln_affine": complexity::sgn_param_overhead(f, m, true),
                    "ffn_flops": complexity::ffn_baseline_flops(d, f),
                    "sgn_overhead_flops_per_token": complexity::sgn_flops(f, f, m, Convention::PerToken),
                    "sgn_flops_single_layer": complexity::sgn_flops(d, f, m, Convention::SingleLayer),
                });
                out.json("block_costs.json", &block)?;
                let counts = enumerate_counts(seed, c.enumerated_shapes)?;
                let mut csv = String::from(
                    "d_model,d_ff,m,ln_affine,grid,order,ffn_formula,ffn_enumerated,sgn_overhead_formula,sgn_overhead_enumerated,kan_formula,kan_enumerated\n",
                );
                for r in &counts {
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                        r.d_model, r.d_ff, r.m, r.ln_affine, r.grid, r.order, r.ffn_formula, r.ffn_enumerated,
                        r.sgn_overhead_formula, r.sgn_overhead_enumerated, r.kan_formula, r.kan_enumerated
                    ));
                }
                out.table("param_enumeration", &csv, &counts)?;
                let exact = counts.iter().filter(|r| r.exact()).count();
                let sgn: Vec<_> = rows.iter().filter(|r| r.model.name() == "sgn").collect();
                let mut kan: Vec<_> = rows.iter().filter(|r| r.model.name() == "kan").collect();
                kan.sort_by_key(|r| r.grid);
                let constant = sgn.windows(2).all(|w| w[0].params == w[1].params && w[0].flops == w[1].flops);
                let rising = kan.windows(2).all(|w| w[0].grid == w[1].grid || w[0].params < w[1].params);
                Ok(vec![
                    Check::new(
                        "formulas_match_constructed_layers",
                        exact == counts.len(),
                        format!("{exact} of {} random shapes exact", counts.len()),
                    ),
                    Check::new("sgn_independent_of_grid", constant, format!("{} grid sizes", sgn.len())),
                    Check::new("kan_increases_with_grid", rising, format!("{} grid sizes", kan.len())),
                ])
            }
            Self::Fit(c, tasks) => {
                let report = run_fit_suite(&c.models, tasks, &c.protocol).map_err(runtime)?;
                out.table("fit", &report.to_csv(), &report.rows)?;
                let reference = c.models[0].label.as_str();
                let rivals: Vec<&str> = c
                    .models
                    .iter()
                    .skip(1)
                    .filter(|e| matches!(e.spec, ModelSpec::Mlp { activation: Activation::Gelu, .. }))
                    .map(|e| e.label.as_str())
                    .collect();
                let names: Vec<String> = tasks.iter().map(|t| t.name.clone()).collect();
                Ok(fit_checks(&report, reference, &rivals, &names))
            }
            Self::Sincos(c) => {
                let r = run_sincos_experiment(c).map_err(runtime)?;
                out.table("sincos_summary", &r.summary_csv(), &r.runs)?;
                out.table("sincos_spectrum", &r.spectrum_csv(), &r.spectra)?;
                let mut checks = vec![Check::new(
                    "all_predictions_finite",
                    r.runs.iter().all(|x| x.all_finite),
                    format!("{} runs", r.runs.len()),
                )];
                for target in ["sin", "cos"] {
                    let l1 = |m: &str| r.run(target, m).and_then(|x| x.spectrum_l1);
                    let (s, relu) = (l1("sgn"), l1("mlp_relu"));
                    checks.push(Check::new(
                        &format!("sgn_spectrum_closer_than_relu_{target}"),
                        matches!((s, relu), (Some(a), Some(b)) if a <= b),
                        format!("L1 sgn {s:?}, mlp_relu {relu:?}"),
                    ));
                }
                Ok(checks)
            }
            Self::Extrapolate(c) => {
                let r = run_extrapolation_experiment(c).map_err(runtime)?;
                out.table("extrapolation", &r.to_csv(), &r.rows)?;
                let mut checks = Vec::new();
                for seed in r.seeds() {
                    let get = |v: &str| r.row(seed, v);
                    let pure = get("pure_spectral");
                    let hybrid = get("hybrid");
                    let ratio = pure.and_then(|p| p.ratio());
                    checks.push(Check::new(
                        &format!("seed{seed}_pure_spectral_extrapolation_fails"),
                        ratio.is_some_and(|x| x >= 100.0),
                        format!("extrapolation / train MSE = {ratio:?}"),
                    ));
                    let (h, p) = (
                        hybrid.and_then(|x| x.extrapolation_mse),
                        pure.and_then(|x| x.extrapolation_mse),
                    );
                    checks.push(Check::new(
                        &format!("seed{seed}_hybrid_extrapolates"),
                        matches!((h, p), (Some(a), Some(b)) if a <= 0.1 * b),
                        format!("hybrid {h:?} against pure spectral {p:?}"),
                    ));
                    let fits = ["mlp", "hybrid", "pure_spectral"]
                        .iter()
                        .all(|v| get(v).and_then(|x| x.train_mse).is_some_and(|t| t < 1e-2));
                    checks.push(Check::new(&format!("seed{seed}_all_fit_in_domain"), fits, "train MSE < 1e-2"));
                }
                Ok(checks)
            }
            Self::Probe(c) => {
                let r = run_probe_experiment(c).map_err(runtime)?;
                out.json("probe.json", &r)?;
                out.table("probe", &r.to_csv(), &r.runs)?;
                let (lo, hi) = match (c.probe.bands.iter().min(), c.probe.bands.iter().max()) {
                    (Some(&a), Some(&b)) => (a, b),
                    _ => return Err(runtime("no bands")),
                };
                let failed = r.runs.iter().filter(|x| x.report.is_none()).count();
                let n = c.seeds.len();
                let mlp_order = c
                    .seeds
                    .iter()
                    .filter(|&&s| not_later(r.converged("mlp_gelu", s, lo), r.converged("mlp_gelu", s, hi)))
                    .count();
                let sgn_first = c
                    .seeds
                    .iter()
                    .filter(|&&s| not_later(r.converged("sgn", s, hi), r.converged("mlp_gelu", s, hi)))
                    .count();
                Ok(vec![
                    Check::new("runs_trained", failed == 0, format!("{failed} failed runs")),
                    Check::new(
                        "mlp_low_band_first",
                        majority(mlp_order, n),
                        format!("mlp band {lo} no later than band {hi} on {mlp_order} of {n} seeds"),
                    ),
                    Check::new(
                        "sgn_high_band_no_later_than_mlp",
                        majority(sgn_first, n),
                        format!("sgn band {hi} no later than mlp on {sgn_first} of {n} seeds"),
                    ),
                ])
            }
            Self::GateAblation(c) => {
                let report = run_gate_ablation(c).map_err(runtime)?;
                out.table("gate_ablation", &report.to_csv(), &report.rows)?;
                Ok(fit_checks(&report, "full", &["no_gate"], &c.compared_tasks))
            }
        }
    }
}
