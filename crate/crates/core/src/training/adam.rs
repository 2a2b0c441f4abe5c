use super::{Optimizer, TrainConfig};
use crate::error::{shape_err, Result};
use crate::layers::ParamBlocks;
use crate::numkit::Scalar;

/// First and second moments, one buffer per parameter block.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<P: ParamBlocks<T>>(params: &P) -> Self {
        let m: Vec<Vec<T>> = params.blocks().iter().map(|b| vec![T::zero(); b.data.len()]).collect();
        Self { v: m.clone(), m, t: 0 }
    }
}

fn check_mirror<T: Scalar>(params: &impl ParamBlocks<T>, grads: &impl ParamBlocks<T>) -> Result<()> {
    let p: Vec<_> = params.blocks().iter().map(|b| (b.name, b.data.len())).collect();
    let g: Vec<_> = grads.blocks().iter().map(|b| (b.name, b.data.len())).collect();
    if p != g {
        return Err(shape_err("gradient blocks do not mirror parameter blocks"));
    }
    Ok(())
}

/// One bias-corrected Adam update.
pub fn adam_step<T: Scalar>(
    params: &mut impl ParamBlocks<T>,
    grads: &impl ParamBlocks<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    check_mirror(params, grads)?;
    if state.m.len() != grads.blocks().len() {
        return Err(shape_err("optimizer state does not match parameter blocks"));
    }
    state.t += 1;
    let (b1, b2) = (T::lit(cfg.adam_beta1), T::lit(cfg.adam_beta2));
    let lr = T::lit(cfg.learning_rate);
    let eps = T::lit(cfg.adam_eps);
    let c1 = T::one() - b1.powi(state.t as i32);
    let c2 = T::one() - b2.powi(state.t as i32);
    let gblocks = grads.blocks();
    for (((_, p), g), (m, v)) in params
        .blocks_mut()
        .into_iter()
        .zip(gblocks.iter())
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        if m.len() != p.len() {
            return Err(shape_err("optimizer state does not match parameter blocks"));
        }
        for i in 0..p.len() {
            let gi = g.data[i];
            m[i] = b1 * m[i] + (T::one() - b1) * gi;
            v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p[i] -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Plain gradient descent.
pub fn sgd_step<T: Scalar>(params: &mut impl ParamBlocks<T>, grads: &impl ParamBlocks<T>, lr: T) -> Result<()> {
    check_mirror(params, grads)?;
    let gblocks = grads.blocks();
    for ((_, p), g) in params.blocks_mut().into_iter().zip(gblocks.iter()) {
        for (pi, &gi) in p.iter_mut().zip(g.data) {
            *pi -= lr * gi;
        }
    }
    Ok(())
}

pub(crate) fn apply_update<T: Scalar>(
    params: &mut impl ParamBlocks<T>,
    grads: &impl ParamBlocks<T>,
    state: &mut AdamState<T>,
    cfg: &TrainConfig,
) -> Result<()> {
    match cfg.optimizer {
        Optimizer::Adam => adam_step(params, grads, state, cfg),
        Optimizer::Sgd => sgd_step(params, grads, T::lit(cfg.learning_rate)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{BlockShape, MlpParams};
    use crate::numkit::Rng;
    use crate::Activation;

    fn model() -> MlpParams<f64> {
        MlpParams::init(BlockShape::ffn(2, 3), Activation::Gelu, &mut Rng::new(1))
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = model();
        let before = p.to_flat();
        let mut g = p.clone();
        let signs: Vec<f64> = (0..before.len()).map(|i| if i % 3 == 0 { -2.5 } else { 0.7 }).collect();
        g.set_flat(&signs).unwrap();
        let cfg = TrainConfig::default();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        for ((a, b), s) in p.to_flat().iter().zip(&before).zip(&signs) {
            let step = a - b;
            assert!((step + cfg.learning_rate * s.signum()).abs() < 1e-3 * 1e-6);
        }
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut p = model();
        let before = p.to_flat();
        let mut g = p.clone();
        g.fill_zero();
        let cfg = TrainConfig::default();
        let mut st = AdamState::new(&p);
        for _ in 0..50 {
            adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        }
        assert_eq!(p.to_flat(), before);
    }

    #[test]
    fn trajectories_are_bit_identical() {
        let run = || {
            let mut p = model();
            let mut st = AdamState::new(&p);
            let cfg = TrainConfig::default();
            let mut rng = Rng::new(8);
            let mut g = p.clone();
            for _ in 0..100 {
                let v: Vec<f64> = (0..p.num_params()).map(|_| rng.gaussian(0.0, 1.0)).collect();
                g.set_flat(&v).unwrap();
                adam_step(&mut p, &g, &mut st, &cfg).unwrap();
            }
            p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sgd_step_is_plain_descent() {
        let mut p = model();
        let before = p.to_flat();
        let mut g = p.clone();
        g.set_flat(&vec![1.0; before.len()]).unwrap();
        sgd_step(&mut p, &g, 0.5).unwrap();
        for (a, b) in p.to_flat().iter().zip(&before) {
            assert_eq!(*a, b - 0.5);
        }
    }
}
