use super::{check_len, BlockRef, BlockShape, Model, ParamBlocks, SgnParams};
use crate::activations::Activation;
use crate::error::{shape_err, Result};
use crate::numkit::{DenseMatrix, Rng, Scalar};

/// Two-layer block `y = W2 phi(W1 x + b1) + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams<T> {
    pub w1: DenseMatrix<T>,
    pub b1: Vec<T>,
    pub w2: DenseMatrix<T>,
    pub b2: Vec<T>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads<T> {
    pub w1: DenseMatrix<T>,
    pub b1: Vec<T>,
    pub w2: DenseMatrix<T>,
    pub b2: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct MlpCache<T> {
    pub x: Vec<T>,
    pub u: Vec<T>,
    pub h: Vec<T>,
}

impl<T: Scalar> MlpParams<T> {
    /// Fan-in Gaussian weights, zero biases.
    pub fn init(shape: BlockShape, activation: Activation, rng: &mut Rng) -> Self {
        let BlockShape { d_in, d_ff, d_out } = shape;
        let s1 = (1.0 / d_in as f64).sqrt();
        let s2 = (1.0 / d_ff as f64).sqrt();
        let w1 = DenseMatrix::from_fn(d_ff, d_in, |_, _| T::lit(rng.gaussian(0.0, s1)));
        let w2 = DenseMatrix::from_fn(d_out, d_ff, |_, _| T::lit(rng.gaussian(0.0, s2)));
        Self {
            w1,
            b1: vec![T::zero(); d_ff],
            w2,
            b2: vec![T::zero(); d_out],
            activation,
        }
    }

    pub fn zeros(shape: BlockShape, activation: Activation) -> Self {
        Self {
            w1: DenseMatrix::zeros(shape.d_ff, shape.d_in),
            b1: vec![T::zero(); shape.d_ff],
            w2: DenseMatrix::zeros(shape.d_out, shape.d_ff),
            b2: vec![T::zero(); shape.d_out],
            activation,
        }
    }

    /// The base branch of an SGN block as a standalone MLP.
    pub fn from_sgn(p: &SgnParams<T>) -> Self {
        Self {
            w1: p.w1.clone(),
            b1: p.b1.clone(),
            w2: p.w2.clone(),
            b2: p.b2.clone(),
            activation: p.activation(),
        }
    }

    pub fn shape(&self) -> BlockShape {
        BlockShape {
            d_in: self.w1.cols(),
            d_ff: self.w1.rows(),
            d_out: self.w2.rows(),
        }
    }
}

impl<T: Scalar> MlpGrads<T> {
    pub fn zeros_like(p: &MlpParams<T>) -> Self {
        let s = p.shape();
        Self {
            w1: DenseMatrix::zeros(s.d_ff, s.d_in),
            b1: vec![T::zero(); s.d_ff],
            w2: DenseMatrix::zeros(s.d_out, s.d_ff),
            b2: vec![T::zero(); s.d_out],
        }
    }
}

pub fn mlp_forward<T: Scalar>(x: &[T], p: &MlpParams<T>) -> Result<(Vec<T>, MlpCache<T>)> {
    check_len(x, p.w1.cols(), "input")?;
    let mut u = p.w1.matvec(x)?;
    for (ui, &b) in u.iter_mut().zip(&p.b1) {
        *ui += b;
    }
    let h: Vec<T> = u.iter().map(|&v| p.activation.value(v)).collect();
    let mut y = p.w2.matvec(&h)?;
    for (yi, &b) in y.iter_mut().zip(&p.b2) {
        *yi += b;
    }
    Ok((y, MlpCache { x: x.to_vec(), u, h }))
}

fn accumulate<T: Scalar>(dy: &[T], c: &MlpCache<T>, p: &MlpParams<T>, g: &mut MlpGrads<T>) -> Result<Vec<T>> {
    check_len(dy, p.w2.rows(), "upstream gradient")?;
    if c.u.len() != p.w1.rows() || c.x.len() != p.w1.cols() {
        return Err(shape_err("cache does not belong to these parameters"));
    }
    for (gb, &d) in g.b2.iter_mut().zip(dy) {
        *gb += d;
    }
    g.w2.add_outer(T::one(), dy, &c.h);
    let mut du = p.w2.matvec_t(dy)?;
    for (d, &u) in du.iter_mut().zip(&c.u) {
        *d *= p.activation.derivative(u);
    }
    for (gb, &d) in g.b1.iter_mut().zip(&du) {
        *gb += d;
    }
    g.w1.add_outer(T::one(), &du, &c.x);
    p.w1.matvec_t(&du)
}

/// Parameter gradients and input gradient for upstream `dy`.
pub fn mlp_backward<T: Scalar>(dy: &[T], cache: &MlpCache<T>, p: &MlpParams<T>) -> Result<(MlpGrads<T>, Vec<T>)> {
    let mut g = MlpGrads::zeros_like(p);
    let dx = accumulate(dy, cache, p, &mut g)?;
    Ok((g, dx))
}

macro_rules! mlp_blocks {
    ($s:ident) => {
        vec![
            BlockRef { name: "w1", rows: $s.w1.rows(), cols: $s.w1.cols(), data: $s.w1.as_slice() },
            BlockRef { name: "b1", rows: $s.b1.len(), cols: 1, data: &$s.b1 },
            BlockRef { name: "w2", rows: $s.w2.rows(), cols: $s.w2.cols(), data: $s.w2.as_slice() },
            BlockRef { name: "b2", rows: $s.b2.len(), cols: 1, data: &$s.b2 },
        ]
    };
}

macro_rules! mlp_blocks_mut {
    ($s:ident) => {
        vec![
            ("w1", $s.w1.as_mut_slice()),
            ("b1", &mut $s.b1[..]),
            ("w2", $s.w2.as_mut_slice()),
            ("b2", &mut $s.b2[..]),
        ]
    };
}

impl<T: Scalar> ParamBlocks<T> for MlpParams<T> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        mlp_blocks!(self)
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        mlp_blocks_mut!(self)
    }
}

impl<T: Scalar> ParamBlocks<T> for MlpGrads<T> {
    fn blocks(&self) -> Vec<BlockRef<'_, T>> {
        mlp_blocks!(self)
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [T])> {
        mlp_blocks_mut!(self)
    }
}

impl<T: Scalar> Model<T> for MlpParams<T> {
    type Cache = MlpCache<T>;
    type Grads = MlpGrads<T>;

    fn kind(&self) -> &'static str {
        "mlp"
    }

    fn input_dim(&self) -> usize {
        self.w1.cols()
    }

    fn output_dim(&self) -> usize {
        self.w2.rows()
    }

    fn forward(&self, x: &[T]) -> Result<(Vec<T>, MlpCache<T>)> {
        mlp_forward(x, self)
    }

    fn backward_into(&self, dy: &[T], cache: &MlpCache<T>, grads: &mut MlpGrads<T>) -> Result<()> {
        accumulate(dy, cache, self, grads).map(|_| ())
    }

    fn zero_grads(&self) -> MlpGrads<T> {
        MlpGrads::zeros_like(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::finite_diff_grad;

    #[test]
    fn zero_weights_give_bias() {
        let mut p: MlpParams<f64> = MlpParams::zeros(BlockShape { d_in: 3, d_ff: 4, d_out: 2 }, Activation::Gelu);
        p.b2 = vec![1.5, -2.0];
        assert_eq!(mlp_forward(&[1.0, 2.0, 3.0], &p).unwrap().0, vec![1.5, -2.0]);
    }

    #[test]
    fn backward_matches_finite_differences() {
        for act in Activation::ALL {
            let mut rng = Rng::new(3);
            let mut p: MlpParams<f64> = MlpParams::init(BlockShape { d_in: 3, d_ff: 5, d_out: 2 }, act, &mut rng);
            p.b1 = vec![0.3, -0.2, 0.1, 0.7, -0.9];
            let x = [0.4, -1.1, 0.8];
            let target = [0.5, -0.5];
            let loss = |q: &MlpParams<f64>, x: &[f64]| {
                let y = mlp_forward(x, q).unwrap().0;
                0.5 * y.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            };
            let (y, c) = mlp_forward(&x, &p).unwrap();
            let dy: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a - b).collect();
            let (g, dx) = mlp_backward(&dy, &c, &p).unwrap();
            let fd = finite_diff_grad(
                |v: &[f64]| {
                    let mut q = p.clone();
                    q.set_flat(v).unwrap();
                    loss(&q, &x)
                },
                &p.to_flat(),
                1e-5,
            )
            .unwrap();
            for (a, b) in g.to_flat().iter().zip(&fd) {
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
                assert!(rel < 1e-6 || (a - b).abs() < 1e-10, "{act:?}: {a} vs {b}");
            }
            let fdx = finite_diff_grad(|v: &[f64]| loss(&p, v), &x, 1e-5).unwrap();
            for (a, b) in dx.iter().zip(&fdx) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parameter_count() {
        let p: MlpParams<f64> = MlpParams::zeros(BlockShape::ffn(2, 3), Activation::Relu);
        assert_eq!(p.num_params(), 17);
    }

    #[test]
    fn wrong_input_length() {
        let p: MlpParams<f64> = MlpParams::zeros(BlockShape::ffn(2, 3), Activation::Relu);
        assert!(mlp_forward(&[1.0], &p).is_err());
    }
}
