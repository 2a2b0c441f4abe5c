//! Gate ablation: learned gate, fixed gate and no gate.

use serde::{Deserialize, Serialize};
use sgn_core::{Result, SpectralMode};

use crate::fit::{run_fit_suite, FitProtocol, FitReport, ModelEntry};
use crate::models::ModelSpec;
use crate::tasks::task_by_name;

pub const FIXED_GATE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateAblationConfig {
    /// Full-gate architecture; the other variants only change its mode.
    pub sgn: ModelSpec,
    pub tasks: Vec<String>,
    /// High-frequency tasks on which the full gate is compared to no gate.
    pub compared_tasks: Vec<String>,
    pub protocol: FitProtocol,
}

impl Default for GateAblationConfig {
    fn default() -> Self {
        Self {
            sgn: ModelSpec::sgn(32, 16),
            tasks: vec!["bessel".into(), "oscillating_decay".into(), "high_freq_sum_wide".into()],
            compared_tasks: vec!["oscillating_decay".into(), "high_freq_sum_wide".into()],
            protocol: FitProtocol {
                seeds: (0..3).collect(),
                ..FitProtocol::default()
            },
        }
    }
}

/// `full`: `phi + G * Psi`; `fixed_gate`: `phi + 0.1 Psi`; `no_gate`: `phi + Psi`.
pub fn ablation_variants(sgn: &ModelSpec) -> Vec<ModelEntry> {
    vec![
        ModelEntry::fixed("full", sgn.clone().with_mode(SpectralMode::Gated)),
        ModelEntry::fixed("fixed_gate", sgn.clone().with_mode(SpectralMode::FixedGate(FIXED_GATE))),
        ModelEntry::fixed("no_gate", sgn.clone().with_mode(SpectralMode::Additive)),
    ]
}

pub fn run_gate_ablation(cfg: &GateAblationConfig) -> Result<FitReport> {
    let tasks = cfg
        .tasks
        .iter()
        .map(|t| task_by_name(t))
        .collect::<Result<Vec<_>>>()?;
    run_fit_suite(&ablation_variants(&cfg.sgn), &tasks, &cfg.protocol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sgn_core::training::TrainConfig;

    #[test]
    fn variants_stay_within_budget() {
        let cfg = GateAblationConfig::default();
        let v = ablation_variants(&cfg.sgn);
        assert!(crate::fit::resolve_models(&v, 1, 0.1).is_ok());
    }

    #[test]
    fn quick_ablation_runs() {
        let cfg = GateAblationConfig {
            sgn: ModelSpec::sgn(4, 2),
            tasks: vec!["bessel".into()],
            compared_tasks: Vec::new(),
            protocol: FitProtocol {
                train: TrainConfig {
                    epochs: 3,
                    ..TrainConfig::default()
                },
                seeds: vec![0],
                n_train: Some(20),
                n_test: Some(20),
                ..FitProtocol::default()
            },
        };
        let r = run_gate_ablation(&cfg).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.failures(), 0);
    }
}
