//! The spectral gating block
//!
//! ```text
//! u    = W1 x + b1
//! G(u) = sigmoid(w_g * LN(u) + b_g)
//! Psi  = gamma(u) A_r                       gamma: 2m Fourier features of u
//! T(u) = phi(u) + G(u) * Psi
//! y    = W2 T(u) + b2
//! ```
//!
//! [`SpectralMode`] selects the gated operator or one of the ablation
//! variants (fixed coefficient, ungated sum, spectral branch alone).

use serde::{Deserialize, Serialize};

use super::layernorm::{layer_norm, layer_norm_backward, LnStats};
use super::{check_len, BlockRef, BlockShape, Model, ParamBlocks};
use crate::activations::Activation;
use crate::error::{shape_err, Error, Result};
use crate::numkit::{sigmoid, DenseMatrix, Rng, Scalar};
use crate::rff::{features_from_arguments, rff_init, RffParams, ScaleMode};

/// How the spectral branch `Psi` is combined with the base activation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "coef")]
pub enum SpectralMode {
    /// `phi(u) + G(u) * Psi(u)`
    Gated,
    /// `phi(u) + c * Psi(u)` with a constant `c`.
    FixedGate(f64),
    /// `phi(u) + Psi(u)`
    Additive,
    /// `G(u) * Psi(u)`: base branch removed.
    PureSpectral,
}

impl SpectralMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gated => "gated",
            Self::FixedGate(_) => "fixed_gate",
            Self::Additive => "additive",
            Self::PureSpectral => "pure_spectral",
        }
    }

    fn uses_gate(&self) -> bool {
        matches!(self, Self::Gated | Self::PureSpectral)
    }

    fn has_base(&self) -> bool {
        !matches!(self, Self::PureSpectral)
    }
}

/// Everything needed to construct (and later reconstruct) an SGN block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgnConfig {
    pub d_in: usize,
    pub d_ff: usize,
    pub d_out: usize,
    /// Spectral budget: number of trainable frequencies.
    pub m: usize,
    /// Frequency bandwidth scale; frequencies start as `N(0, sigma^2 / d_ff)`.
    pub sigma: f64,
    /// Standard deviation of the initial spectral projection `A_r`.
    pub eps: f64,
    pub gate_bias_init: f64,
    pub activation: Activation,
    pub mode: SpectralMode,
    /// Whether the gate LayerNorm has trainable affine parameters.
    pub ln_affine: bool,
    pub seed: u64,
}

impl SgnConfig {
    pub fn new(shape: BlockShape, m: usize) -> Self {
        Self {
            d_in: shape.d_in,
            d_ff: shape.d_ff,
            d_out: shape.d_out,
            m,
            sigma: crate::DEFAULT_SIGMA,
            eps: crate::DEFAULT_EPS,
            gate_bias_init: crate::DEFAULT_GATE_BIAS,
            activation: Activation::Gelu,
            mode: SpectralMode::Gated,
            ln_affine: true,
            seed: 0,
        }
    }

    /// Spectral budget of the ablation default configuration, whose
    /// "num_grids = 9" setting is read as `m = 9`.
    pub const ABLATION_M: usize = 9;

    /// [`SgnConfig::new`] with `m = ABLATION_M`.
    pub fn ablation_preset(shape: BlockShape) -> Self {
        Self::new(shape, Self::ABLATION_M)
    }

    pub fn shape(&self) -> BlockShape {
        BlockShape {
            d_in: self.d_in,
            d_ff: self.d_ff,
            d_out: self.d_out,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.d_ff == 0 || self.d_out == 0 || self.m == 0 {
            return Err(Error::Parameter(format!(
                "dimensions must be positive: d_in={}, d_ff={}, d_out={}, m={}",
                self.d_in, self.d_ff, self.d_out, self.m
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Parameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(Error::Parameter(format!(
                "eps must be non-negative, got {}",
                self.eps
            )));
        }
        if !self.gate_bias_init.is_finite() {
            return Err(Error::Parameter("gate bias must be finite".into()));
        }
        Ok(())
    }
}

/// Learnable state of one SGN block.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnParams<T> {
    pub config: SgnConfig,
    /// `d_ff x d_in`
    pub w1: DenseMatrix<T>,
    pub b1: Vec<T>,
    /// Frequencies `d_ff x m` and phases `m`.
    pub rff: RffParams<T>,
    /// `2m x d_ff`
    pub ar: DenseMatrix<T>,
    pub wg: Vec<T>,
    pub bg: Vec<T>,
    pub ln_gamma: Vec<T>,
    pub ln_beta: Vec<T>,
    /// `d_out x d_ff`
    pub w2: DenseMatrix<T>,
    pub b2: Vec<T>,
}

/// Gradients mirroring [`SgnParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct SgnGrads<T> {
    pub w1: DenseMatrix<T>,
    pub b1: Vec<T>,
    pub wr: DenseMatrix<T>,
    pub br: Vec<T>,
    pub ar: DenseMatrix<T>,
    pub wg: Vec<T>,
    pub bg: Vec<T>,
    pub ln_gamma: Vec<T>,
    pub ln_beta: Vec<T>,
    pub w2: DenseMatrix<T>,
    pub b2: Vec<T>,
    ln_affine: bool,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct SgnCache<T> {
    pub x: Vec<T>,
    pub u: Vec<T>,
    pub ln: LnStats<T>,
    pub ln_out: Vec<T>,
    pub gate: Vec<T>,
    /// `W_r^T u + b_r`
    pub args: Vec<T>,
    /// Fourier features `gamma(u)`.
    pub features: Vec<T>,
    pub psi: Vec<T>,
    /// `T(u)`
    pub t: Vec<T>,
}

fn gaussian_vec<T: Scalar>(rng: &mut Rng, n: usize, std: f64) -> Vec<T> {
    (0..n).map(|_| T::lit(rng.gaussian(0.0, std))).collect()
}

impl<T: Scalar> SgnParams<T> {
    /// Homotopy initialization.
    ///
    /// Draw order: `W1 ~ N(0, 1/d_in)`, `W2 ~ N(0, 1/d_ff)`, frequencies
    /// `N(0, sigma^2/d_ff)`, phases `U[0, 2 pi)`, `A_r ~ N(0, eps^2)`. Biases
    /// start at zero, `w_g = 0`, `b_g = gate_bias_init`, LayerNorm affine is
    /// the identity.
    pub fn init(config: &SgnConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let BlockShape { d_in, d_ff, d_out } = config.shape();
        let m = config.m;
        let w1 = DenseMatrix::from_vec(d_ff, d_in, gaussian_vec(rng, d_ff * d_in, (1.0 / d_in as f64).sqrt()))?;
        let w2 =
            DenseMatrix::from_vec(d_out, d_ff, gaussian_vec(rng, d_out * d_ff, (1.0 / d_ff as f64).sqrt()))?;
        let rff = rff_init(d_ff, m, config.sigma, rng)?;
        let ar = DenseMatrix::from_vec(2 * m, d_ff, gaussian_vec(rng, 2 * m * d_ff, config.eps))?;
        Ok(Self {
            config: config.clone(),
            w1,
            b1: vec![T::zero(); d_ff],
            rff,
            ar,
            wg: vec![T::zero(); d_ff],
            bg: vec![T::lit(config.gate_bias_init); d_ff],
            ln_gamma: vec![T::one(); d_ff],
            ln_beta: vec![T::zero(); d_ff],
            w2,
            b2: vec![T::zero(); d_out],
        })
    }

    /// [`init`](Self::init) with a generator seeded from `config.seed`.
    pub fn from_config(config: &SgnConfig) -> Result<Self> {
        Self::init(config, &mut Rng::new(config.seed))
    }

    pub fn d_in(&self) -> usize {
        self.w1.cols()
    }

    pub fn d_ff(&self) -> usize {
        self.w1.rows()
    }

    pub fn d_out(&self) -> usize {
        self.w2.rows()
    }

    pub fn m(&self) -> usize {
        self.rff.m()
    }

    pub fn activation(&self) -> Activation {
        self.config.activation
    }

    pub fn mode(&self) -> SpectralMode {
        self.config.mode
    }

    /// Checks that every block agrees with `(d_in, d_ff, d_out, m)`.
    pub fn validate_shapes(&self) -> Result<()> {
        let (d_in, d_ff, d_out, m) = (self.d_in(), self.d_ff(), self.d_out(), self.m());
        let ok = self.b1.len() == d_ff
            && self.rff.wr.shape() == (d_ff, m)
            && self.rff.br.len() == m
            && self.ar.shape() == (2 * m, d_ff)
            && self.wg.len() == d_ff
            && self.bg.len() == d_ff
            && self.ln_gamma.len() == d_ff
            && self.ln_beta.len() == d_ff
            && self.w2.cols() == d_ff
            && self.b2.len() == d_out
            && self.rff.scale_mode == ScaleMode::LayerScale;
        if !ok {
            return Err(shape_err(format!(
                "inconsistent SGN blocks for d_in={d_in}, d_ff={d_ff}, d_out={d_out}, m={m}"
            )));
        }
        Ok(())
    }

    fn gate_from_ln(&self, ln_out: &[T]) -> Vec<T> {
        ln_out
            .iter()
            .zip(self.wg.iter().zip(&self.bg))
            .map(|(&l, (&w, &b))| sigmoid(w * l + b))
            .collect()
    }

    /// `(T(u), cache)` for a hidden pre-activation `u`.
    fn activation_cached(&self, u: &[T]) -> Result<(Vec<T>, SgnCache<T>)> {
        check_len(u, self.d_ff(), "hidden pre-activation")?;
        let (ln_out, ln) = layer_norm(u, &self.ln_gamma, &self.ln_beta);
        let gate = self.gate_from_ln(&ln_out);
        let args = self.rff.arguments(u)?;
        let features = features_from_arguments(&args, self.rff.scale());
        let psi = self.ar.matvec_t(&features)?;
        let act = self.activation();
        let t = match self.mode() {
            SpectralMode::Gated => u
                .iter()
                .zip(gate.iter().zip(&psi))
                .map(|(&ui, (&g, &p))| act.value(ui) + g * p)
                .collect(),
            SpectralMode::FixedGate(c) => {
                let c = T::lit(c);
                u.iter().zip(&psi).map(|(&ui, &p)| act.value(ui) + c * p).collect()
            }
            SpectralMode::Additive => u.iter().zip(&psi).map(|(&ui, &p)| act.value(ui) + p).collect(),
            SpectralMode::PureSpectral => gate.iter().zip(&psi).map(|(&g, &p)| g * p).collect(),
        };
        let cache = SgnCache {
            x: Vec::new(),
            u: u.to_vec(),
            ln,
            ln_out,
            gate,
            args,
            features,
            psi,
            t: Vec::new(),
        };
        Ok((t, cache))
    }

    /// Coefficient multiplying `Psi` in channel `k`.
    #[inline]
    fn psi_coef(&self, gate: &[T], k: usize) -> T {
        match self.mode() {
            SpectralMode::Gated | SpectralMode::PureSpectral => gate[k],
            SpectralMode::FixedGate(c) => T::lit(c),
            SpectralMode::Additive => T::one(),
        }
    }

    /// Backpropagates `dt = dL/dT` through the activation operator; adds
    /// spectral/gate gradients into `grads` and returns `dL/du`.
    fn activation_backward(&self, dt: &[T], cache: &SgnCache<T>, grads: &mut SgnGrads<T>) -> Result<Vec<T>> {
        let d_ff = self.d_ff();
        let m = self.m();
        check_len(dt, d_ff, "activation upstream gradient")?;
        let mode = self.mode();
        let act = self.activation();
        let mut du = vec![T::zero(); d_ff];
        if mode.has_base() {
            for ((d, &g), &ui) in du.iter_mut().zip(dt).zip(&cache.u) {
                *d = g * act.derivative(ui);
            }
        }

        // spectral projection
        let dpsi: Vec<T> = (0..d_ff).map(|k| dt[k] * self.psi_coef(&cache.gate, k)).collect();
        grads.ar.add_outer(T::one(), &cache.features, &dpsi);
        let dfeat = self.ar.matvec(&dpsi)?;

        // Fourier features -> arguments -> (W_r, b_r, u)
        let s = self.rff.scale();
        let mut dz = vec![T::zero(); m];
        for j in 0..m {
            let (sin, cos) = cache.args[j].sin_cos();
            dz[j] = s * (cos * dfeat[m + j] - sin * dfeat[j]);
        }
        for (g, &d) in grads.br.iter_mut().zip(&dz) {
            *g += d;
        }
        grads.wr.add_outer(T::one(), &cache.u, &dz);
        let du_rff = self.rff.wr.matvec(&dz)?;
        for (d, v) in du.iter_mut().zip(du_rff) {
            *d += v;
        }

        // gate -> LayerNorm -> u
        if mode.uses_gate() {
            let mut d_hat = vec![T::zero(); d_ff];
            for k in 0..d_ff {
                let g = cache.gate[k];
                let da = dt[k] * cache.psi[k] * g * (T::one() - g);
                grads.wg[k] += da * cache.ln_out[k];
                grads.bg[k] += da;
                let dln = da * self.wg[k];
                if grads.ln_affine {
                    grads.ln_gamma[k] += dln * cache.ln.normalized[k];
                    grads.ln_beta[k] += dln;
                }
                d_hat[k] = dln * self.ln_gamma[k];
            }
            for (d, v) in du.iter_mut().zip(layer_norm_backward(&d_hat, &cache.ln)) {
                *d += v;
            }
        }
        Ok(du)
    }

    /// Opens the gate on every channel (`w_g = 0`, `b_g = gate_bias`) and
    /// writes cosine coefficients `alpha` and sine coefficients `beta` into
    /// column `channel` of `A_r`, so that channel computes
    /// `phi(u_k) + sigmoid(gate_bias) * sum_j (alpha_j cos z_j + beta_j sin z_j) * sqrt(2/m)`.
    pub fn embed_sinusoids(&mut self, channel: usize, alpha: &[T], beta: &[T], gate_bias: T) -> Result<()> {
        let m = self.m();
        if channel >= self.d_ff() || alpha.len() != m || beta.len() != m {
            return Err(shape_err(format!(
                "channel {channel} with {} + {} coefficients for d_ff={}, m={m}",
                alpha.len(),
                beta.len(),
                self.d_ff()
            )));
        }
        self.wg.iter_mut().for_each(|w| *w = T::zero());
        self.bg.iter_mut().for_each(|b| *b = gate_bias);
        for j in 0..m {
            self.ar.set(j, channel, alpha[j]);
            self.ar.set(m + j, channel, beta[j]);
        }
        Ok(())
    }

    /// Splits `dT/du` into the base, spectral-injection and gate-modulation
    /// terms, each `d_ff x d_ff`:
    /// `J = diag(phi'(u)) + diag(c) J_Psi + diag(Psi) J_G`.
    pub fn jacobian_terms(&self, u: &[T]) -> Result<JacobianTerms<T>> {
        let d = self.d_ff();
        let (_, cache) = self.activation_cached(u)?;
        let mode = self.mode();
        let act = self.activation();

        let mut base = DenseMatrix::zeros(d, d);
        if mode.has_base() {
            for k in 0..d {
                base.set(k, k, act.derivative(u[k]));
            }
        }

        // J_Psi = A_r^T J_gamma
        let jgamma = self.rff.feature_jacobian(u)?;
        let jpsi = crate::numkit::matmul(&self.ar.transpose(), &jgamma)?;
        let mut spectral = DenseMatrix::zeros(d, d);
        for k in 0..d {
            let c = self.psi_coef(&cache.gate, k);
            for i in 0..d {
                spectral.set(k, i, c * jpsi.get(k, i));
            }
        }

        let mut gate_mod = DenseMatrix::zeros(d, d);
        if mode.uses_gate() {
            let n = T::from_usize_lossy(d);
            let hat = &cache.ln.normalized;
            for k in 0..d {
                let g = cache.gate[k];
                let outer = cache.psi[k] * g * (T::one() - g) * self.wg[k] * self.ln_gamma[k] * cache.ln.inv_std;
                for i in 0..d {
                    let delta = if i == k { T::one() } else { T::zero() };
                    let dhat = delta - T::one() / n - hat[k] * hat[i] / n;
                    gate_mod.set(k, i, outer * dhat);
                }
            }
        }
        Ok(JacobianTerms {
            base,
            spectral_injection: spectral,
            gate_modulation: gate_mod,
        })
    }
}

/// The three additive pieces of `dT/du`.
#[derive(Clone, Debug)]
pub struct JacobianTerms<T> {
    pub base: DenseMatrix<T>,
    pub spectral_injection: DenseMatrix<T>,
    pub gate_modulation: DenseMatrix<T>,
}

impl<T: Scalar> JacobianTerms<T> {
    pub fn total(&self) -> DenseMatrix<T> {
        let data = self
            .base
            .as_slice()
            .iter()
            .zip(self.spectral_injection.as_slice())
            .zip(self.gate_modulation.as_slice())
            .map(|((&a, &b), &c)| a + b + c)
            .collect();
        DenseMatrix::from_vec(self.base.rows(), self.base.cols(), data).expect("square blocks")
    }
}

/// Gate values `sigmoid(w_g * LN(u) + b_g)`.
pub fn gate<T: Scalar>(u: &[T], p: &SgnParams<T>) -> Result<Vec<T>> {
    check_len(u, p.d_ff(), "hidden pre-activation")?;
    let (ln_out, _) = layer_norm(u, &p.ln_gamma, &p.ln_beta);
    Ok(p.gate_from_ln(&ln_out))
}

/// The activation operator `T(u)`.
pub fn sgn_activation<T: Scalar>(u: &[T], p: &SgnParams<T>) -> Result<Vec<T>> {
    Ok(p.activation_cached(u)?.0)
}

/// `y = W2 T(W1 x + b1) + b2`.
pub fn sgn_forward<T: Scalar>(x: &[T], p: &SgnParams<T>) -> Result<(Vec<T>, SgnCache<T>)> {
    check_len(x, p.d_in(), "input")?;
    let mut u = p.w1.matvec(x)?;
    for (ui, &b) in u.iter_mut().zip(&p.b1) {
        *ui += b;
    }
    let (t, mut cache) = p.activation_cached(&u)?;
    let mut y = p.w2.matvec(&t)?;
    for (yi, &b) in y.iter_mut().zip(&p.b2) {
        *yi += b;
    }
    cache.x = x.to_vec();
    cache.t = t;
    Ok((y, cache))
}

/// Parameter gradients and the input gradient for upstream `dy = dL/dy`.
pub fn sgn_backward<T: Scalar>(dy: &[T], cache: &SgnCache<T>, p: &SgnParams<T>) -> Result<(SgnGrads<T>, Vec<T>)> {
    let mut grads = SgnGrads::zeros_like(p);
    let dx = backward_accumulate(dy, cache, p, &mut grads)?;
    Ok((grads, dx))
}

fn backward_accumulate<T: Scalar>(
    dy: &[T],
    cache: &SgnCache<T>,
    p: &SgnParams<T>,
    grads: &mut SgnGrads<T>,
) -> Result<Vec<T>> {
    check_len(dy, p.d_out(), "upstream gradient")?;
    if cache.u.len() != p.d_ff() || cache.x.len() != p.d_in() {
        return Err(shape_err("cache does not belong to these parameters"));
    }
    for (g, &d) in grads.b2.iter_mut().zip(dy) {
        *g += d;
    }
    grads.w2.add_outer(T::one(), dy, &cache.t);
    let dt = p.w2.matvec_t(dy)?;
    let du = p.activation_backward(&dt, cache, grads)?;
    for (g, &d) in grads.b1.iter_mut().zip(&du) {
        *g += d;
    }
    grads.w1.add_outer(T::one(), &du, &cache.x);
    p.w1.matvec_t(&du)
}

/// Homotopy initialization of a `d_model -> d_ff -> d_model` block.
#[allow(clippy::too_many_arguments)]
pub fn homotopy_init<T: Scalar>(
    d_model: usize,
    d_ff: usize,
    m: usize,
    eps: f64,
    sigma: f64,
    gate_bias_init: f64,
    rng: &mut Rng,
) -> Result<SgnParams<T>> {
    let mut cfg = SgnConfig::new(BlockShape::ffn(d_model, d_ff), m);
    cfg.eps = eps;
    cfg.sigma = sigma;
    cfg.gate_bias_init = gate_bias_init;
    SgnParams::init(&cfg, rng)
}

impl<T: Scalar> SgnGrads<T> {
    pub fn zeros_like(p: &SgnParams<T>) -> Self {
        let (d_in, d_ff, d_out, m) = (p.d_in(), p.d_ff(), p.d_out(), p.m());
        Self {
            w1: DenseMatrix::zeros(d_ff, d_in),
            b1: vec![T::zero(); d_ff],
            wr: DenseMatrix::zeros(d_ff, m),
            br: vec![T::zero(); m],
            ar: DenseMatrix::zeros(2 * m, d_ff),
            wg: vec![T::zero(); d_ff],
            bg: vec![T::zero(); d_ff],
            ln_gamma: vec![T::zero(); d_ff],
            ln_beta: vec![T::zero(); d_ff],
            w2: DenseMatrix::zeros(d_out, d_ff),
            b2: vec![T::zero(); d_out],
            ln_affine: p.config.ln_affine,
        }
    }
}

macro_rules! sgn_blocks {
    ($self:ident, $wr:expr, $br:expr) => {{
        let mut v = vec![
            BlockRef { name: "w1", rows: $self.w1.rows(), cols: $self.w1.cols(), data: $self.w1.as_slice() },
            BlockRef { name: "b1", rows: $self.b1.len(), cols: 1, data: &$self.b1 },
            BlockRef { name: "wr", rows: $wr.rows(), cols: $wr.cols(), data: $wr.as_slice() },
            BlockRef { name: "br", rows: $br.len(), cols: 1, data: &$br },
            BlockRef { name: "ar", rows: $self.ar.rows(), cols: $self.ar.cols(), data: $self.ar.as_slice() },
            BlockRef { name: "wg", rows: $self.wg.len(), cols: 1, data: &$self.wg },
            BlockRef { name: "bg", rows: $self.bg.len(), cols: 1, data: &$self.bg },
        ];
        if $self.ln_affine_flag() {
            v.push(BlockRef { name: "ln_gamma", rows: $self.ln_gamma.len(), cols: 1, data: &$self.ln_gamma });
            v.push(BlockRef { name: "ln_beta", rows: $self.ln_beta.len(), cols: 1, data: &$self.ln_beta });
        }
        v.push(BlockRef { name: "w2", rows: $self.w2.rows(), cols: $self.w2.cols(), data: $self.w2.as_slice() });
        v.push(BlockRef { name: "b2", rows: $self.b2.len(), cols: 1, data: &$self.b2 });
        v
    }};
}

macro_rules! sgn_blocks_mut {
    ($self:ident, $wr:expr, $br:expr) => {{
        let affine = $self.ln_affine_flag();
        let mut v: Vec<(&'static str, &mut [T])> = vec![
            ("w1", $self.w1.as_mut_slice()),
            ("b1", &mut $self.b1[..]),
            ("wr", $wr.as_mut_slice()),
            ("br", &mut $br[..]),
            ("ar", $self.ar.as_mut_slice()),
            ("wg", &mut $self.wg[..]),
            ("bg", &mut $self.bg[..]),
        ];
        if affine {
            v.push(("ln_gamma", &mut $self.ln_gamma[..]));
            v.push(("ln_beta", &mut $self.ln_beta[..]));
        }
        v.push(("w2", $self.w2.as_mut_slice()));
        v.push(("b2", &mut $self.b2[..]));
        v
    }};
}

impl<T> SgnParams<T> {
    fn ln_affine_flag(&self) -> bool {
        self.config.ln_affine
    }
}

impl<T> SgnGrads<T> {
    fn ln_affine_flag(&self) -> bool {
        self.ln_affine
    }
}

impl<T: Scalar> ParamBlocks<T> for SgnParams<T> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        sgn_blocks!(self, self.rff.wr, self.rff.br)
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        sgn_blocks_mut!(self, self.rff.wr, self.rff.br)
    }
}

impl<T: Scalar> ParamBlocks<T> for SgnGrads<T> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        sgn_blocks!(self, self.wr, self.br)
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        sgn_blocks_mut!(self, self.wr, self.br)
    }
}

impl<T: Scalar> Model<T> for SgnParams<T> {
    type Cache = SgnCache<T>;
    type Grads = SgnGrads<T>;

    fn kind(&self) -> &'static str {
        "sgn"
    }

    fn input_dim(&self) -> usize {
        self.d_in()
    }

    fn output_dim(&self) -> usize {
        self.d_out()
    }

    fn forward(&self, x: &[T]) -> Result<(Vec<T>, SgnCache<T>)> {
        sgn_forward(x, self)
    }

    fn backward_into(&self, dy: &[T], cache: &SgnCache<T>, grads: &mut SgnGrads<T>) -> Result<()> {
        backward_accumulate(dy, cache, self, grads).map(|_| ())
    }

    fn zero_grads(&self) -> SgnGrads<T> {
        SgnGrads::zeros_like(self)
    }
}
