//! Exactness studies on small random blocks: gradient checks, homotopy
//! identities, basis containment and kernel convergence.

use serde::{Deserialize, Serialize};
use sgn_core::layers::{
    homotopy_init, mlp_backward, mlp_forward, sgn_activation, sgn_backward, sgn_forward, ParamBlocks,
};
use sgn_core::numkit::sigmoid;
use sgn_core::rff::{rff_init_with_mode, ScaleMode};
use sgn_core::training::{gradient_check, GradCheckReport};
use sgn_core::{Activation, Dataset, Error, Mlp, Result, Rng, Sgn, SpectralMode};

fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gaussian(0.0, 1.0)).collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckStudyConfig {
    pub instances: usize,
    pub max_d_model: usize,
    pub max_d_ff: usize,
    pub max_m: usize,
    pub samples: usize,
    pub tolerance: f64,
}

impl Default for GradCheckStudyConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            max_d_model: 4,
            max_d_ff: 6,
            max_m: 3,
            samples: 3,
            tolerance: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckInstance {
    pub d_model: usize,
    pub d_ff: usize,
    pub m: usize,
    pub mode: String,
    pub report: GradCheckReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckStudy {
    pub seed: u64,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub passed: bool,
    pub instances: Vec<GradCheckInstance>,
}

/// A homotopy-initialized block with every parameter then perturbed, so that
/// the gate is partly open and all branches carry gradient.
pub fn random_block(rng: &mut Rng, d_model: usize, d_ff: usize, m: usize, mode: SpectralMode) -> Result<Sgn> {
    let gate_bias = rng.uniform_range(-1.0, 1.0);
    let mut p: Sgn = homotopy_init(d_model, d_ff, m, 0.5, sgn_core::DEFAULT_SIGMA, gate_bias, rng)?;
    for (_, b) in p.blocks_mut() {
        b.iter_mut().for_each(|v| *v += rng.gaussian(0.0, 0.3));
    }
    p.config.mode = mode;
    Ok(p)
}

const MODES: [SpectralMode; 4] = [
    SpectralMode::Gated,
    SpectralMode::FixedGate(0.1),
    SpectralMode::Additive,
    SpectralMode::PureSpectral,
];

/// Analytic gradients of random tiny blocks against central differences.
/// Modes cycle through all four variants.
pub fn gradcheck_study(seed: u64, cfg: &GradCheckStudyConfig) -> Result<GradCheckStudy> {
    if cfg.instances == 0 || cfg.max_d_model == 0 || cfg.max_d_ff == 0 || cfg.max_m == 0 || cfg.samples == 0 {
        return Err(Error::Parameter("gradcheck study sizes must be positive".into()));
    }
    let mut rng = Rng::new(seed);
    let mut instances = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances {
        let d_model = 1 + (rng.next_u64() % cfg.max_d_model as u64) as usize;
        let d_ff = 1 + (rng.next_u64() % cfg.max_d_ff as u64) as usize;
        let m = 1 + (rng.next_u64() % cfg.max_m as u64) as usize;
        let mode = MODES[i % MODES.len()];
        let p = random_block(&mut rng, d_model, d_ff, m, mode)?;
        let xs = (0..cfg.samples).map(|_| gaussian_vec(&mut rng, d_model)).collect();
        let ys = (0..cfg.samples).map(|_| gaussian_vec(&mut rng, d_model)).collect();
        let data = Dataset::new(xs, ys)?;
        let report = gradient_check(&p, &data, cfg.tolerance)?;
        instances.push(GradCheckInstance {
            d_model,
            d_ff,
            m,
            mode: mode.name().to_string(),
            report,
        });
    }
    let max_rel_error = instances.iter().map(|r| r.report.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckStudy {
        seed,
        tolerance: cfg.tolerance,
        max_rel_error,
        passed: max_rel_error < cfg.tolerance,
        instances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomotopyStudyConfig {
    pub d_model: usize,
    pub d_ff: usize,
    pub m: usize,
    pub sigma: f64,
    pub eps: f64,
    pub gate_bias: f64,
    pub identity_inputs: usize,
    pub instances: usize,
    pub gate_biases: Vec<f64>,
}

impl Default for HomotopyStudyConfig {
    fn default() -> Self {
        Self {
            d_model: 4,
            d_ff: 8,
            m: 4,
            sigma: sgn_core::DEFAULT_SIGMA,
            eps: sgn_core::DEFAULT_EPS,
            gate_bias: sgn_core::DEFAULT_GATE_BIAS,
            identity_inputs: 100,
            instances: 20,
            gate_biases: vec![-2.0, -4.0, -6.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingInstance {
    /// Ratios at `eps` over `eps / 2`.
    pub base_grad_deviation_ratio: f64,
    pub frequency_grad_ratio: f64,
    pub gate_grad_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyStudy {
    pub seed: u64,
    /// Inputs on which the `eps = 0` block and its MLP agree bit for bit.
    pub bitwise_identical: usize,
    pub identity_inputs: usize,
    /// `|T(2 eps) - phi| / |T(eps) - phi|`, worst distance from 2.
    pub value_ratio_max_error: f64,
    pub scaling: Vec<ScalingInstance>,
    /// `|grad A_r| / sigmoid(b_g)` for each gate bias, normalized by the first.
    pub gate_bias_normalized: Vec<(f64, f64)>,
}

impl HomotopyStudy {
    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        self.scaling.iter().all(|s| {
            [s.base_grad_deviation_ratio, s.frequency_grad_ratio, s.gate_grad_ratio]
                .iter()
                .all(|r| (lo..=hi).contains(r))
        })
    }

    pub fn gate_scaling_within(&self, tol: f64) -> bool {
        self.gate_bias_normalized.iter().all(|(_, r)| (r - 1.0).abs() <= tol)
    }
}

fn gradient_parts(p: &Sgn, x: &[f64], dy: &[f64]) -> Result<(f64, f64, f64)> {
    let (_, c) = sgn_forward(x, p)?;
    let (g, _) = sgn_backward(dy, &c, p)?;
    let mlp = Mlp::from_sgn(p);
    let (_, mc) = mlp_forward(x, &mlp)?;
    let (mg, _) = mlp_backward(dy, &mc, &mlp)?;
    let mut dev = 0.0;
    for name in ["w1", "b1", "w2", "b2"] {
        let (a, b) = (g.block(name), mg.block(name));
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::Shape(format!("missing block {name}")));
        };
        dev += a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
    }
    Ok((dev.sqrt(), g.block_norm(&["wr", "br"]), g.block_norm(&["wg", "bg"])))
}

/// Value and gradient behaviour of the homotopy initialization as the
/// spectral projection scale `eps` varies.
pub fn homotopy_study(seed: u64, cfg: &HomotopyStudyConfig) -> Result<HomotopyStudy> {
    let mut rng = Rng::new(seed);
    let (d, f, m) = (cfg.d_model, cfg.d_ff, cfg.m);

    // eps = 0: the block is its MLP
    let p0: Sgn = homotopy_init(d, f, m, 0.0, cfg.sigma, cfg.gate_bias, &mut rng)?;
    let mlp = Mlp::from_sgn(&p0);
    let mut bitwise_identical = 0;
    for _ in 0..cfg.identity_inputs {
        let x = gaussian_vec(&mut rng, d);
        let (a, _) = sgn_forward(&x, &p0)?;
        let (b, _) = mlp_forward(&x, &mlp)?;
        if a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()) {
            bitwise_identical += 1;
        }
    }

    // fixed direction A~, projection eps A~ and 2 eps A~
    let mut value_ratio_max_error = 0.0f64;
    let mut scaling = Vec::with_capacity(cfg.instances);
    for _ in 0..cfg.instances {
        let base: Sgn = homotopy_init(d, f, m, cfg.eps, cfg.sigma, cfg.gate_bias, &mut rng)?;
        let u = gaussian_vec(&mut rng, f);
        let phi: Vec<f64> = u.iter().map(|&v| base.activation().value(v)).collect();
        let dev = |scale: f64| -> Result<f64> {
            let mut p = base.clone();
            p.ar = base.ar.scale(scale);
            let t = sgn_activation(&u, &p)?;
            Ok(l2(&t.iter().zip(&phi).map(|(a, b)| a - b).collect::<Vec<_>>()))
        };
        value_ratio_max_error = value_ratio_max_error.max((dev(2.0)? / dev(1.0)? - 2.0).abs());

        let x = gaussian_vec(&mut rng, d);
        let dy = gaussian_vec(&mut rng, d);
        let at = |scale: f64| -> Result<(f64, f64, f64)> {
            let mut p = base.clone();
            p.ar = base.ar.scale(scale);
            gradient_parts(&p, &x, &dy)
        };
        let (full, half) = (at(1.0)?, at(0.5)?);
        scaling.push(ScalingInstance {
            base_grad_deviation_ratio: full.0 / half.0,
            frequency_grad_ratio: full.1 / half.1,
            gate_grad_ratio: full.2 / half.2,
        });
    }

    // projection gradient against the initial gate value
    let base: Sgn = homotopy_init(d, f, m, cfg.eps, cfg.sigma, cfg.gate_bias, &mut rng)?;
    let x = gaussian_vec(&mut rng, d);
    let dy = gaussian_vec(&mut rng, d);
    let mut raw = Vec::new();
    for &b in &cfg.gate_biases {
        let mut p = base.clone();
        p.bg.iter_mut().for_each(|v| *v = b);
        let (_, c) = sgn_forward(&x, &p)?;
        let (g, _) = sgn_backward(&dy, &c, &p)?;
        raw.push((b, g.block_norm(&["ar"]) / sigmoid(b)));
    }
    let first = raw.first().map_or(1.0, |r| r.1);
    let gate_bias_normalized = raw.into_iter().map(|(b, v)| (b, v / first)).collect();

    Ok(HomotopyStudy {
        seed,
        bitwise_identical,
        identity_inputs: cfg.identity_inputs,
        value_ratio_max_error,
        scaling,
        gate_bias_normalized,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisContainment {
    pub channel: usize,
    pub gate_bias: f64,
    /// Requested `sum_j a_j cos(z_j) + c_j sin(z_j)` coefficients.
    pub cos_coefs: Vec<f64>,
    pub sin_coefs: Vec<f64>,
    /// `|T_k - phi(u_k) - s| / |s|` over all probe inputs.
    pub relative_error: f64,
    pub inputs: usize,
}

/// Embeds a requested three-term sinusoid sum on one channel of a random
/// block and measures how closely the block's activation reproduces it.
pub fn basis_containment(seed: u64, gate_bias: f64, inputs: usize) -> Result<BasisContainment> {
    let (d, f, m) = (3, 6, 3);
    let mut rng = Rng::new(seed);
    let mut p: Sgn = homotopy_init(d, f, m, sgn_core::DEFAULT_EPS, sgn_core::DEFAULT_SIGMA, -4.0, &mut rng)?;
    let channel = (rng.next_u64() % f as u64) as usize;
    let cos_coefs: Vec<f64> = (0..m).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let sin_coefs: Vec<f64> = (0..m).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    // the feature map carries sqrt(2/m); divide it out of the projection
    let s = (2.0 / m as f64).sqrt();
    let alpha: Vec<f64> = cos_coefs.iter().map(|a| a / s).collect();
    let beta: Vec<f64> = sin_coefs.iter().map(|c| c / s).collect();
    p.embed_sinusoids(channel, &alpha, &beta, gate_bias)?;

    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for _ in 0..inputs {
        let u = gaussian_vec(&mut rng, f);
        let t = sgn_activation(&u, &p)?;
        let z = p.rff.arguments(&u)?;
        let want: f64 = (0..m)
            .map(|j| cos_coefs[j] * z[j].cos() + sin_coefs[j] * z[j].sin())
            .sum();
        let got = t[channel] - Activation::Gelu.value(u[channel]);
        err2 += (got - want).powi(2);
        ref2 += want * want;
    }
    Ok(BasisContainment {
        channel,
        gate_bias,
        cos_coefs,
        sin_coefs,
        relative_error: (err2 / ref2).sqrt(),
        inputs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelStudyConfig {
    /// Kernel bandwidth; frequencies are drawn `N(0, 1 / sigma_k^2)`.
    pub sigma_k: f64,
    pub budgets: Vec<usize>,
    pub seeds: usize,
    pub grid_points: usize,
    pub max_distance: f64,
}

impl Default for KernelStudyConfig {
    fn default() -> Self {
        Self {
            sigma_k: 1.0,
            budgets: vec![64, 256, 1024, 4096],
            seeds: 200,
            grid_points: 20,
            max_distance: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBudgetResult {
    pub m: usize,
    /// Mean over seeds of the sup-grid absolute error.
    pub mean_sup_error: f64,
    pub std_error: f64,
    /// Mean estimate at distance exactly 1.
    pub mean_estimate_at_one: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelStudy {
    pub sigma_k: f64,
    pub seeds: usize,
    pub distances: Vec<f64>,
    pub budgets: Vec<KernelBudgetResult>,
}

impl KernelStudy {
    pub fn budget(&self, m: usize) -> Option<&KernelBudgetResult> {
        self.budgets.iter().find(|b| b.m == m)
    }

    /// `error(m) / error(16 m)` when both budgets were run.
    pub fn ratio_16x(&self, m: usize) -> Option<f64> {
        Some(self.budget(m)?.mean_sup_error / self.budget(16 * m)?.mean_sup_error)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,mean_sup_error,std_error,mean_estimate_at_one\n");
        for b in &self.budgets {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                b.m, b.mean_sup_error, b.std_error, b.mean_estimate_at_one
            ));
        }
        out
    }
}

/// One-dimensional Gaussian kernel approximation by paired Fourier features:
/// for each budget and seed, the sup over a distance grid on
/// `[0, max_distance]` of `|z(0)^T z(delta) - exp(-delta^2 / (2 sigma_k^2))|`.
pub fn kernel_study(seed: u64, cfg: &KernelStudyConfig) -> Result<KernelStudy> {
    if !(cfg.sigma_k > 0.0) || cfg.seeds < 2 || cfg.grid_points < 2 || cfg.budgets.contains(&0) {
        return Err(Error::Parameter(
            "kernel study needs sigma_k > 0, >= 2 seeds, >= 2 grid points and positive budgets".into(),
        ));
    }
    let distances: Vec<f64> = (0..cfg.grid_points)
        .map(|i| cfg.max_distance * i as f64 / (cfg.grid_points - 1) as f64)
        .collect();
    let exact: Vec<f64> = distances
        .iter()
        .map(|d| (-d * d / (2.0 * cfg.sigma_k * cfg.sigma_k)).exp())
        .collect();
    let mut budgets = Vec::new();
    for &m in &cfg.budgets {
        let mut sups = Vec::with_capacity(cfg.seeds);
        let mut at_one = 0.0;
        for s in 0..cfg.seeds {
            let mut rng = Rng::with_stream(seed.wrapping_add(s as u64), m as u64);
            let p = rff_init_with_mode::<f64>(1, m, 1.0 / cfg.sigma_k, ScaleMode::KernelScale, &mut rng)?;
            let mut sup = 0.0f64;
            for (&d, &k) in distances.iter().zip(&exact) {
                sup = sup.max((p.kernel_estimate(&[0.0], &[d])? - k).abs());
            }
            at_one += p.kernel_estimate(&[0.0], &[1.0])? / cfg.seeds as f64;
            sups.push(sup);
        }
        let n = sups.len() as f64;
        let mean = sups.iter().sum::<f64>() / n;
        let var = sups.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        budgets.push(KernelBudgetResult {
            m,
            mean_sup_error: mean,
            std_error: (var / n).sqrt(),
            mean_estimate_at_one: at_one,
        });
    }
    Ok(KernelStudy {
        sigma_k: cfg.sigma_k,
        seeds: cfg.seeds,
        distances,
        budgets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_gradcheck_passes() {
        let cfg = GradCheckStudyConfig {
            instances: 4,
            ..GradCheckStudyConfig::default()
        };
        let s = gradcheck_study(3, &cfg).unwrap();
        assert!(s.passed, "{}", s.max_rel_error);
        let modes: Vec<&str> = s.instances.iter().map(|i| i.mode.as_str()).collect();
        assert_eq!(modes, ["gated", "fixed_gate", "additive", "pure_spectral"]);
    }

    #[test]
    fn homotopy_identities_hold() {
        let cfg = HomotopyStudyConfig {
            instances: 3,
            identity_inputs: 10,
            ..HomotopyStudyConfig::default()
        };
        let s = homotopy_study(1, &cfg).unwrap();
        assert_eq!(s.bitwise_identical, 10);
        assert!(s.value_ratio_max_error < 1e-10);
        assert!(s.ratios_within(1.8, 2.2));
        assert!(s.gate_scaling_within(0.2));
    }

    #[test]
    fn containment_is_tight_with_open_gate() {
        let r = basis_containment(5, 12.0, 50).unwrap();
        assert!(r.relative_error < 1e-4);
        // a half-open gate halves the injected sum
        let h = basis_containment(5, 0.0, 50).unwrap();
        assert!((h.relative_error - 0.5).abs() < 1e-9);
    }

    #[test]
    fn kernel_mean_near_one_matches_closed_form() {
        let cfg = KernelStudyConfig {
            budgets: vec![1024],
            seeds: 20,
            grid_points: 4,
            ..KernelStudyConfig::default()
        };
        let s = kernel_study(0, &cfg).unwrap();
        assert!((s.budgets[0].mean_estimate_at_one - (-0.5f64).exp()).abs() < 0.02);
        assert!(s.to_csv().starts_with("m,mean_sup_error"));
    }
}
