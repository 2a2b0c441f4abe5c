//! The regression task registry.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sgn_core::numkit::bessel_j0;
use sgn_core::{Dataset, Error, Result, Rng};

/// How points are drawn from a domain box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Tensor grid with `round(n^(1/arity))` points per axis, endpoints included.
    UniformGrid,
    UniformRandom,
}

/// A domain: a union of axis-aligned boxes, each one `(lo, hi)` per input.
/// Random samples pick a box with probability proportional to its volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub boxes: Vec<Vec<(f64, f64)>>,
}

impl Domain {
    pub fn cube(arity: usize, lo: f64, hi: f64) -> Self {
        Self {
            boxes: vec![vec![(lo, hi); arity]],
        }
    }

    pub fn union(boxes: Vec<Vec<(f64, f64)>>) -> Self {
        Self { boxes }
    }

    fn volume(b: &[(f64, f64)]) -> f64 {
        b.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn validate(&self, arity: usize) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(Error::Parameter("domain has no boxes".into()));
        }
        for b in &self.boxes {
            if b.len() != arity {
                return Err(Error::Shape(format!("box of dimension {} for arity {arity}", b.len())));
            }
            if b.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
                return Err(Error::Parameter(format!("degenerate box {b:?}")));
            }
        }
        Ok(())
    }

    /// `n` points. Grids are split across boxes by volume.
    pub fn sample(&self, n: usize, sampling: Sampling, rng: &mut Rng) -> Vec<Vec<f64>> {
        let total: f64 = self.boxes.iter().map(|b| Self::volume(b)).sum();
        match sampling {
            Sampling::UniformRandom => (0..n)
                .map(|_| {
                    let mut r = rng.uniform() * total;
                    let mut chosen = &self.boxes[self.boxes.len() - 1];
                    for b in &self.boxes {
                        let v = Self::volume(b);
                        if r < v {
                            chosen = b;
                            break;
                        }
                        r -= v;
                    }
                    chosen.iter().map(|&(lo, hi)| rng.uniform_range(lo, hi)).collect()
                })
                .collect(),
            Sampling::UniformGrid => {
                let mut out = Vec::with_capacity(n);
                let mut left = n;
                for (i, b) in self.boxes.iter().enumerate() {
                    let share = if i + 1 == self.boxes.len() {
                        left
                    } else {
                        ((n as f64 * Self::volume(b) / total).round() as usize).min(left)
                    };
                    left -= share;
                    out.extend(grid_points(b, share));
                }
                out
            }
        }
    }
}

fn grid_points(b: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    if n == 0 {
        return Vec::new();
    }
    let d = b.len();
    let per_axis = ((n as f64).powf(1.0 / d as f64).round() as usize).max(1);
    let axis = |k: usize, (lo, hi): (f64, f64)| {
        if per_axis == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (per_axis - 1) as f64
        }
    };
    let total = per_axis.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            b.iter()
                .map(|&range| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    axis(k, range)
                })
                .collect()
        })
        .collect()
}

pub type Target = fn(&[f64]) -> f64;

#[derive(Clone, Debug, Serialize)]
pub struct TaskSpec {
    pub name: String,
    pub arity: usize,
    #[serde(skip)]
    pub target: Target,
    pub train_domain: Domain,
    pub test_domain: Domain,
    pub n_train: usize,
    pub n_test: usize,
    pub sampling: Sampling,
}

/// Partial overrides read from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskOverride {
    pub name: String,
    pub train_domain: Option<Domain>,
    pub test_domain: Option<Domain>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub sampling: Option<Sampling>,
}

impl TaskSpec {
    fn new(name: &str, arity: usize, target: Target) -> Self {
        Self {
            name: name.into(),
            arity,
            target,
            train_domain: Domain::cube(arity, -1.0, 1.0),
            test_domain: Domain::cube(arity, -1.0, 1.0),
            n_train: 1000,
            n_test: 1000,
            sampling: Sampling::UniformRandom,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.target)(x)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_domain.validate(self.arity)?;
        self.test_domain.validate(self.arity)?;
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::Parameter(format!("task {} needs samples", self.name)));
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &TaskOverride) -> Result<()> {
        if let Some(d) = &o.train_domain {
            self.train_domain = d.clone();
        }
        if let Some(d) = &o.test_domain {
            self.test_domain = d.clone();
        }
        if let Some(n) = o.n_train {
            self.n_train = n;
        }
        if let Some(n) = o.n_test {
            self.n_test = n;
        }
        if let Some(s) = o.sampling {
            self.sampling = s;
        }
        self.validate()
    }

    /// Train and test sets. Train points follow `sampling`; test points are
    /// always drawn at random from an independent stream.
    pub fn datasets(&self, seed: u64) -> Result<(Dataset<f64>, Dataset<f64>)> {
        self.validate()?;
        let mut train_rng = Rng::with_stream(seed, 1);
        let mut test_rng = Rng::with_stream(seed, 2);
        let xs = self.train_domain.sample(self.n_train, self.sampling, &mut train_rng);
        let xt = self.test_domain.sample(self.n_test, Sampling::UniformRandom, &mut test_rng);
        let label = |xs: Vec<Vec<f64>>| -> Result<Dataset<f64>> {
            let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![self.eval(x)]).collect();
            if let Some(bad) = ys.iter().position(|y| !y[0].is_finite()) {
                return Err(Error::Numeric {
                    coordinate: bad,
                    detail: format!("task {} target not finite", self.name),
                });
            }
            Dataset::new(xs, ys)
        };
        Ok((label(xs)?, label(xt)?))
    }
}

pub fn bessel(x: &[f64]) -> f64 {
    bessel_j0(20.0 * x[0])
}

pub fn chaotic(x: &[f64]) -> f64 {
    ((PI * x[0]).sin() + x[1] * x[1]).exp()
}

pub fn simple_product(x: &[f64]) -> f64 {
    x[0] * x[1]
}

pub fn high_freq_sum(x: &[f64]) -> f64 {
    (1..=100).map(|k| (k as f64 * x[0] / 100.0).sin()).sum()
}

pub fn highly_nonlinear(x: &[f64]) -> f64 {
    ((x[0] * x[0] + x[1] * x[1]).sin() + (x[2] * x[2] + x[3] * x[3]).sin()).exp()
}

pub fn discontinuous(x: &[f64]) -> f64 {
    let x = x[0];
    if x < -0.5 {
        -1.0
    } else if x < 0.0 {
        x * x
    } else if x < 0.5 {
        (4.0 * PI * x).sin()
    } else {
        1.0
    }
}

pub fn oscillating_decay(x: &[f64]) -> f64 {
    (-x[0] * x[0]).exp() * (10.0 * PI * x[0]).sin()
}

pub fn rational(x: &[f64]) -> f64 {
    let r = x[0] * x[0] + x[1] * x[1];
    r / (1.0 + r)
}

pub fn multi_scale(x: &[f64]) -> f64 {
    (x[0] * x[1] * x[2]).tanh() + (PI * x[0]).sin() * (PI * x[1]).cos() * (-x[2] * x[2]).exp()
}

pub fn exp_sine(x: &[f64]) -> f64 {
    let d = (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2);
    (50.0 * x[0]).sin() * (50.0 * x[1]).cos() + (-d / 0.1).exp()
}

pub fn square(x: &[f64]) -> f64 {
    x[0] * x[0]
}

pub fn sine(x: &[f64]) -> f64 {
    x[0].sin()
}

pub fn cosine(x: &[f64]) -> f64 {
    x[0].cos()
}

/// `sin(2 pi x) + sin(16 pi x) + sin(64 pi x)`: tones at 1, 8 and 32 cycles on `[0, 1]`.
pub fn three_tone(x: &[f64]) -> f64 {
    let x = x[0];
    (2.0 * PI * x).sin() + (16.0 * PI * x).sin() + (64.0 * PI * x).sin()
}

/// The ten benchmark functions on `[-1, 1]^arity`.
pub fn task_registry() -> Vec<TaskSpec> {
    vec![
        TaskSpec::new("bessel", 1, bessel),
        TaskSpec::new("chaotic", 2, chaotic),
        TaskSpec::new("simple_product", 2, simple_product),
        TaskSpec::new("high_freq_sum", 1, high_freq_sum),
        TaskSpec::new("highly_nonlinear", 4, highly_nonlinear),
        TaskSpec::new("discontinuous", 1, discontinuous),
        TaskSpec::new("oscillating_decay", 1, oscillating_decay),
        TaskSpec::new("rational", 2, rational),
        TaskSpec::new("multi_scale", 3, multi_scale),
        TaskSpec::new("exp_sine", 2, exp_sine),
    ]
}

/// High-Freq-Sum on `[-pi, pi]`.
pub fn high_freq_sum_wide() -> TaskSpec {
    let mut t = TaskSpec::new("high_freq_sum_wide", 1, high_freq_sum);
    t.train_domain = Domain::cube(1, -PI, PI);
    t.test_domain = Domain::cube(1, -PI, PI);
    t
}

/// Every registered task plus the presets, looked up by name.
pub fn task_by_name(name: &str) -> Result<TaskSpec> {
    task_registry()
        .into_iter()
        .chain(std::iter::once(high_freq_sum_wide()))
        .find(|t| t.name == name)
        .ok_or_else(|| Error::Parameter(format!("unknown task {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_freq_sum_values() {
        assert_eq!(high_freq_sum(&[0.0]), 0.0);
        assert!((high_freq_sum(&[1e-6]) - 5.05e-5).abs() < 1e-9);
    }

    #[test]
    fn discontinuous_values() {
        assert_eq!(discontinuous(&[-1.0]), -1.0);
        assert_eq!(discontinuous(&[0.0]), 0.0);
        assert!(discontinuous(&[0.25]).abs() < 1e-15);
        assert_eq!(discontinuous(&[0.75]), 1.0);
        assert_eq!(discontinuous(&[-0.5]), 0.25);
    }

    #[test]
    fn registry_has_ten_tasks() {
        let r = task_registry();
        assert_eq!(r.len(), 10);
        let arities: Vec<usize> = r.iter().map(|t| t.arity).collect();
        assert_eq!(arities, vec![1, 2, 2, 1, 4, 1, 1, 2, 3, 2]);
        for t in &r {
            t.validate().unwrap();
        }
    }

    #[test]
    fn grid_sampling_covers_box() {
        let d = Domain::cube(2, -1.0, 1.0);
        let pts = d.sample(25, Sampling::UniformGrid, &mut Rng::new(0));
        assert_eq!(pts.len(), 25);
        assert!(pts.contains(&vec![-1.0, -1.0]) && pts.contains(&vec![1.0, 1.0]));
    }

    #[test]
    fn union_sampling_stays_inside() {
        let d = Domain::union(vec![vec![(-2.0, -1.0)], vec![(1.0, 2.0)]]);
        let pts = d.sample(500, Sampling::UniformRandom, &mut Rng::new(3));
        assert!(pts.iter().all(|p| (1.0..=2.0).contains(&p[0].abs())));
        let left = pts.iter().filter(|p| p[0] < 0.0).count();
        assert!((200..300).contains(&left));
        let g = d.sample(10, Sampling::UniformGrid, &mut Rng::new(3));
        assert_eq!(g.len(), 10);
    }

    #[test]
    fn override_rejects_unknown_key() {
        let err = serde_json::from_str::<TaskOverride>(r#"{"name": "bessel", "n_trian": 5}"#).unwrap_err();
        assert!(err.to_string().contains("n_trian"));
    }

    #[test]
    fn datasets_are_deterministic() {
        let t = task_by_name("chaotic").unwrap();
        assert_eq!(t.datasets(4).unwrap(), t.datasets(4).unwrap());
        assert_ne!(t.datasets(4).unwrap().1, t.datasets(5).unwrap().1);
    }
}
