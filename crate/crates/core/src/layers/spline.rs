//! KAN-style layer: every edge `(o, i)` carries a learnable B-spline plus a
//! SiLU residual,
//!
//! ```text
//! y_o = bias_o + sum_i [ base_w * silu(t_i) + scale * sum_c coef_c B_c(t_i) + shift ]
//! ```
//!
//! where `t_i` is input `i` mapped from the layer domain to `[-1, 1]`.
//! Inputs outside the domain are clamped to its boundary before evaluation.

use super::{check_len, BlockRef, Model, ParamBlocks};
use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Rng, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct SplineLayerParams<T> {
    pub d_in: usize,
    pub d_out: usize,
    /// Number of grid intervals on `[-1, 1]`.
    pub grid_size: usize,
    /// Spline degree.
    pub order: usize,
    /// Extended uniform knot vector, `grid_size + 2 * order + 1` entries.
    pub grid: Vec<T>,
    /// `(d_out * d_in) x (grid_size + order)`, row `o * d_in + i`.
    pub coeffs: DenseMatrix<T>,
    pub base_w: DenseMatrix<T>,
    pub spline_scale: DenseMatrix<T>,
    pub shift: DenseMatrix<T>,
    pub bias: Vec<T>,
    /// Raw input interval mapped onto `[-1, 1]`.
    pub domain: (T, T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplineGrads<T> {
    pub coeffs: DenseMatrix<T>,
    pub base_w: DenseMatrix<T>,
    pub spline_scale: DenseMatrix<T>,
    pub shift: DenseMatrix<T>,
    pub bias: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct SplineCache<T> {
    pub t: Vec<T>,
    pub silu: Vec<T>,
    /// Row `i` holds all basis values at `t_i`.
    pub basis: DenseMatrix<T>,
}

/// Uniform knots `t_j = -1 + (j - order) * h`, `h = 2 / grid_size`.
pub fn uniform_knots<T: Scalar>(grid_size: usize, order: usize) -> Vec<T> {
    let h = 2.0 / grid_size as f64;
    (0..=grid_size + 2 * order)
        .map(|j| T::lit(-1.0 + (j as f64 - order as f64) * h))
        .collect()
}

/// All `grid_size + order` B-spline basis values of degree `order` at `t`,
/// by the Cox-de Boor recursion. `t` is clamped to `[-1, 1]`; the right end
/// belongs to the last interval.
pub fn bspline_basis<T: Scalar>(t: T, grid: &[T], grid_size: usize, order: usize) -> Vec<T> {
    debug_assert_eq!(grid.len(), grid_size + 2 * order + 1);
    let t = t.max(-T::one()).min(T::one());
    let h = T::lit(2.0) / T::from_usize_lossy(grid_size);
    let cell = ((t + T::one()) / h).floor().to_f64().unwrap_or(0.0).max(0.0) as usize;
    let span = order + cell.min(grid_size - 1);

    let mut n = vec![T::zero(); grid.len() - 1];
    n[span] = T::one();
    for d in 1..=order {
        for i in 0..grid.len() - 1 - d {
            let left = (t - grid[i]) / (grid[i + d] - grid[i]) * n[i];
            let right = (grid[i + d + 1] - t) / (grid[i + d + 1] - grid[i + 1]) * n[i + 1];
            n[i] = left + right;
        }
    }
    n.truncate(grid_size + order);
    n
}

impl<T: Scalar> SplineLayerParams<T> {
    /// Small random spline coefficients, unit spline scale, base weights
    /// `N(0, 1/d_in)`, zero shift and bias.
    pub fn init(d_in: usize, d_out: usize, grid_size: usize, order: usize, rng: &mut Rng) -> Result<Self> {
        if d_in == 0 || d_out == 0 || grid_size == 0 || order == 0 {
            return Err(Error::Parameter(format!(
                "spline layer needs positive sizes, got d_in={d_in}, d_out={d_out}, G={grid_size}, K={order}"
            )));
        }
        let edges = d_in * d_out;
        let nb = grid_size + order;
        let sb = (1.0 / d_in as f64).sqrt();
        Ok(Self {
            d_in,
            d_out,
            grid_size,
            order,
            grid: uniform_knots(grid_size, order),
            coeffs: DenseMatrix::from_fn(edges, nb, |_, _| T::lit(rng.gaussian(0.0, 0.1))),
            base_w: DenseMatrix::from_fn(d_out, d_in, |_, _| T::lit(rng.gaussian(0.0, sb))),
            spline_scale: DenseMatrix::from_fn(d_out, d_in, |_, _| T::one()),
            shift: DenseMatrix::zeros(d_out, d_in),
            bias: vec![T::zero(); d_out],
            domain: (-T::one(), T::one()),
        })
    }

    pub fn with_domain(mut self, lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Parameter("spline domain must satisfy lo < hi".into()));
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    pub fn num_basis(&self) -> usize {
        self.grid_size + self.order
    }

    fn map_input(&self, x: T) -> T {
        let (lo, hi) = self.domain;
        let t = T::lit(2.0) * (x - lo) / (hi - lo) - T::one();
        t.max(-T::one()).min(T::one())
    }

    pub fn forward_cached(&self, x: &[T]) -> Result<(Vec<T>, SplineCache<T>)> {
        check_len(x, self.d_in, "input")?;
        let t: Vec<T> = x.iter().map(|&v| self.map_input(v)).collect();
        let silu: Vec<T> = t.iter().map(|&v| Activation::Silu.value(v)).collect();
        let nb = self.num_basis();
        let mut basis = DenseMatrix::zeros(self.d_in, nb);
        for (i, &ti) in t.iter().enumerate() {
            basis
                .row_mut(i)
                .copy_from_slice(&bspline_basis(ti, &self.grid, self.grid_size, self.order));
        }
        let mut y = self.bias.clone();
        for (o, yo) in y.iter_mut().enumerate() {
            for i in 0..self.d_in {
                let spline: T = self
                    .coeffs
                    .row(o * self.d_in + i)
                    .iter()
                    .zip(basis.row(i))
                    .map(|(&c, &b)| c * b)
                    .sum();
                *yo += self.base_w.get(o, i) * silu[i] + self.spline_scale.get(o, i) * spline + self.shift.get(o, i);
            }
        }
        Ok((y, SplineCache { t, silu, basis }))
    }

    fn accumulate(&self, dy: &[T], c: &SplineCache<T>, g: &mut SplineGrads<T>) -> Result<()> {
        check_len(dy, self.d_out, "upstream gradient")?;
        for (o, &d) in dy.iter().enumerate() {
            g.bias[o] += d;
            for i in 0..self.d_in {
                let row = o * self.d_in + i;
                let spline: T = self.coeffs.row(row).iter().zip(c.basis.row(i)).map(|(&a, &b)| a * b).sum();
                let s = self.spline_scale.get(o, i);
                for (gc, &b) in g.coeffs.row_mut(row).iter_mut().zip(c.basis.row(i)) {
                    *gc += d * s * b;
                }
                g.base_w.set(o, i, g.base_w.get(o, i) + d * c.silu[i]);
                g.spline_scale.set(o, i, g.spline_scale.get(o, i) + d * spline);
                g.shift.set(o, i, g.shift.get(o, i) + d);
            }
        }
        Ok(())
    }
}

impl<T: Scalar> SplineGrads<T> {
    pub fn zeros_like(p: &SplineLayerParams<T>) -> Self {
        Self {
            coeffs: DenseMatrix::zeros(p.d_in * p.d_out, p.num_basis()),
            base_w: DenseMatrix::zeros(p.d_out, p.d_in),
            spline_scale: DenseMatrix::zeros(p.d_out, p.d_in),
            shift: DenseMatrix::zeros(p.d_out, p.d_in),
            bias: vec![T::zero(); p.d_out],
        }
    }
}

macro_rules! spline_blocks {
    ($s:ident) => {
        vec![
            BlockRef { name: "coeffs", rows: $s.coeffs.rows(), cols: $s.coeffs.cols(), data: $s.coeffs.as_slice() },
            BlockRef { name: "base_w", rows: $s.base_w.rows(), cols: $s.base_w.cols(), data: $s.base_w.as_slice() },
            BlockRef {
                name: "spline_scale",
                rows: $s.spline_scale.rows(),
                cols: $s.spline_scale.cols(),
                data: $s.spline_scale.as_slice(),
            },
            BlockRef { name: "shift", rows: $s.shift.rows(), cols: $s.shift.cols(), data: $s.shift.as_slice() },
            BlockRef { name: "bias", rows: $s.bias.len(), cols: 1, data: &$s.bias },
        ]
    };
}

macro_rules! spline_blocks_mut {
    ($s:ident) => {
        vec![
            ("coeffs", $s.coeffs.as_mut_slice()),
            ("base_w", $s.base_w.as_mut_slice()),
            ("spline_scale", $s.spline_scale.as_mut_slice()),
            ("shift", $s.shift.as_mut_slice()),
            ("bias", &mut $s.bias[..]),
        ]
    };
}

impl<T: Scalar> ParamBlocks<T> for SplineLayerParams<T> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        spline_blocks!(self)
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        spline_blocks_mut!(self)
    }
}

impl<T: Scalar> ParamBlocks<T> for SplineGrads<T> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        spline_blocks!(self)
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        spline_blocks_mut!(self)
    }
}

impl<T: Scalar> Model<T> for SplineLayerParams<T> {
    type Cache = SplineCache<T>;
    type Grads = SplineGrads<T>;

    fn kind(&self) -> &'static str {
        "spline"
    }

    fn input_dim(&self) -> usize {
        self.d_in
    }

    fn output_dim(&self) -> usize {
        self.d_out
    }

    fn forward(&self, x: &[T]) -> Result<(Vec<T>, SplineCache<T>)> {
        self.forward_cached(x)
    }

    fn backward_into(&self, dy: &[T], cache: &SplineCache<T>, grads: &mut SplineGrads<T>) -> Result<()> {
        self.accumulate(dy, cache, grads)
    }

    fn zero_grads(&self) -> SplineGrads<T> {
        SplineGrads::zeros_like(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_diff_grad;

    #[test]
    fn partition_of_unity_and_nonnegative() {
        for (g, k) in [(5, 3), (1, 1), (8, 2), (3, 4)] {
            let grid: Vec<f64> = uniform_knots(g, k);
            for s in 0..100 {
                let t = -1.0 + 2.0 * (s as f64 + 0.5) / 100.0;
                let b = bspline_basis(t, &grid, g, k);
                assert_eq!(b.len(), g + k);
                assert!(b.iter().all(|&v| v >= 0.0));
                assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12, "G={g} K={k} t={t}");
            }
            for t in [-1.0, 1.0] {
                let b = bspline_basis(t, &grid, g, k);
                assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_basis_is_hat_function() {
        // degree 1 on one interval: B_0 = (1 - t)/2, B_1 = (1 + t)/2
        let grid: Vec<f64> = uniform_knots(1, 1);
        let b = bspline_basis(0.5, &grid, 1, 1);
        assert!((b[0] - 0.25).abs() < 1e-15 && (b[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn enumerated_count() {
        let mut rng = Rng::new(0);
        let p: SplineLayerParams<f64> = SplineLayerParams::init(4, 4, 5, 3, &mut rng).unwrap();
        assert_eq!(p.num_params(), 180);
    }

    #[test]
    fn zero_spline_gives_bias_plus_shift() {
        let mut rng = Rng::new(1);
        let mut p: SplineLayerParams<f64> = SplineLayerParams::init(2, 2, 4, 3, &mut rng).unwrap();
        p.coeffs.fill(0.0);
        p.base_w.fill(0.0);
        p.shift = DenseMatrix::from_rows(&[vec![0.5, 0.25], vec![-1.0, 2.0]]).unwrap();
        p.bias = vec![1.0, 3.0];
        let y = p.forward_cached(&[0.3, -0.9]).unwrap().0;
        assert_eq!(y, vec![1.75, 4.0]);
    }

    #[test]
    fn out_of_domain_inputs_are_clamped() {
        let mut rng = Rng::new(2);
        let p: SplineLayerParams<f64> = SplineLayerParams::init(1, 1, 4, 3, &mut rng)
            .unwrap()
            .with_domain(-20.0, 20.0)
            .unwrap();
        let a = p.forward_cached(&[20.0]).unwrap().0;
        let b = p.forward_cached(&[35.0]).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = Rng::new(3);
        let mut p: SplineLayerParams<f64> = SplineLayerParams::init(3, 2, 5, 3, &mut rng).unwrap();
        for (_, b) in p.blocks_mut() {
            b.iter_mut().for_each(|v| *v += rng.gaussian(0.0, 0.2));
        }
        let x = [0.3, -0.6, 0.95];
        let target = [0.1, -0.2];
        let loss = |q: &SplineLayerParams<f64>| {
            let y = q.forward_cached(&x).unwrap().0;
            0.5 * y.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        };
        let (y, c) = p.forward_cached(&x).unwrap();
        let dy: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a - b).collect();
        let mut g = p.zero_grads();
        p.backward_into(&dy, &c, &mut g).unwrap();
        let fd = finite_diff_grad(
            |v: &[f64]| {
                let mut q = p.clone();
                q.set_flat(v).unwrap();
                loss(&q)
            },
            &p.to_flat(),
            1e-5,
        )
        .unwrap();
        for (a, b) in g.to_flat().iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_zero_grid() {
        let mut rng = Rng::new(0);
        assert!(SplineLayerParams::<f64>::init(1, 1, 0, 3, &mut rng).is_err());
    }
}
