use serde::{Deserialize, Serialize};

use super::adam::apply_update;
use super::{mse_loss, AdamState, TrainConfig};
use crate::error::{shape_err, Error, Result};
use crate::layers::{Model, ParamBlocks};
use crate::numkit::{Rng, Scalar};

/// Paired inputs and targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub inputs: Vec<Vec<T>>,
    pub targets: Vec<Vec<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Vec<Vec<T>>, targets: Vec<Vec<T>>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(shape_err(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(shape_err("empty dataset"));
        }
        let (di, dt) = (inputs[0].len(), targets[0].len());
        if inputs.iter().any(|x| x.len() != di) || targets.iter().any(|y| y.len() != dt) {
            return Err(shape_err("ragged dataset rows"));
        }
        Ok(Self { inputs, targets })
    }

    /// Scalar-input, scalar-output samples.
    pub fn from_scalar(xs: &[T], ys: &[T]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect(), ys.iter().map(|&y| vec![y]).collect())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }
}

/// Everything recorded by [`train_regression`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub model: String,
    pub num_params: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Train MSE before any update (index 0) and after every epoch.
    pub train_loss: Vec<f64>,
    pub eval_epochs: Vec<usize>,
    pub test_rmse: Vec<f64>,
    pub min_test_rmse: f64,
    pub final_test_rmse: f64,
    pub final_train_mse: f64,
}

impl ExperimentReport {
    /// `epoch,train_loss,test_rmse`, test RMSE empty where not evaluated.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,test_rmse\n");
        let mut evals = self.eval_epochs.iter().zip(&self.test_rmse).peekable();
        for (epoch, loss) in self.train_loss.iter().enumerate() {
            let rmse = match evals.peek() {
                Some(&(&e, &r)) if e == epoch => {
                    evals.next();
                    format!("{r:e}")
                }
                _ => String::new(),
            };
            out.push_str(&format!("{epoch},{loss:e},{rmse}\n"));
        }
        out
    }
}

/// Mean over samples of the per-sample MSE.
pub fn batch_loss<T: Scalar, M: Model<T>>(model: &M, data: &Dataset<T>) -> Result<T> {
    let mut total = T::zero();
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        total += mse_loss(&model.predict(x)?, y)?.value;
    }
    Ok(total / T::from_usize_lossy(data.len()))
}

/// Root mean squared error over all outputs of all samples.
pub fn evaluate_rmse<T: Scalar, M: Model<T>>(model: &M, data: &Dataset<T>) -> Result<T> {
    Ok(batch_loss(model, data)?.sqrt())
}

fn accumulate_batch<T: Scalar, M: Model<T>>(
    model: &M,
    data: &Dataset<T>,
    idx: &[usize],
    grads: &mut M::Grads,
) -> Result<T> {
    grads.fill_zero();
    let n = T::from_usize_lossy(idx.len());
    let mut total = T::zero();
    for &i in idx {
        let (pred, cache) = model.forward(&data.inputs[i])?;
        let l = mse_loss(&pred, &data.targets[i])?;
        total += l.value;
        let dy: Vec<T> = l.grad.into_iter().map(|g| g / n).collect();
        model.backward_into(&dy, &cache, grads)?;
    }
    Ok(total / n)
}

fn clip_global<T: Scalar>(grads: &mut impl ParamBlocks<T>, max_norm: f64) {
    let norm = grads.to_flat().iter().map(|&g| g * g).sum::<T>().sqrt();
    let max_norm = T::lit(max_norm);
    if norm > max_norm {
        let s = max_norm / norm;
        for (_, b) in grads.blocks_mut() {
            b.iter_mut().for_each(|g| *g *= s);
        }
    }
}

/// Trains `model` in place on `train`, evaluating RMSE on `test`.
///
/// `observer` runs after every epoch (epoch 0 is the untrained model) and may
/// record extra diagnostics. A non-finite loss aborts with
/// [`Error::Training`] carrying the epoch.
pub fn train_regression<T: Scalar, M: Model<T>>(
    model: &mut M,
    train: &Dataset<T>,
    test: &Dataset<T>,
    cfg: &TrainConfig,
    mut observer: Option<&mut dyn FnMut(usize, &M) -> Result<()>>,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if train.input_dim() != model.input_dim() || train.output_dim() != model.output_dim() {
        return Err(shape_err(format!(
            "dataset is {} -> {} but model is {} -> {}",
            train.input_dim(),
            train.output_dim(),
            model.input_dim(),
            model.output_dim()
        )));
    }
    let n = train.len();
    let batch = cfg.batch_size.unwrap_or(n).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Rng::new(cfg.seed);
    let mut state = AdamState::new(model);
    let mut grads = model.zero_grads();

    let check = |epoch: usize, v: f64| -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Training {
                epoch,
                detail: format!("loss became {v}"),
            })
        }
    };

    let mut train_loss = vec![check(0, batch_loss(model, train)?.as_f64())?];
    let mut eval_epochs = vec![0];
    let mut test_rmse = vec![check(0, evaluate_rmse(model, test)?.as_f64())?];
    if let Some(obs) = observer.as_mut() {
        obs(0, model)?;
    }

    for epoch in 1..=cfg.epochs {
        if batch < n {
            // Fisher-Yates with the training generator
            for i in (1..n).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                order.swap(i, j);
            }
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(batch) {
            let l = accumulate_batch(model, train, chunk, &mut grads)?;
            check(epoch, l.as_f64())?;
            if let Some(c) = cfg.grad_clip {
                clip_global(&mut grads, c);
            }
            apply_update(model, &grads, &mut state, cfg)?;
            epoch_loss += l.as_f64();
            batches += 1;
        }
        // full batch: loss after the step is what the next epoch sees, so
        // report the post-update loss at the final epoch only
        let recorded = if epoch == cfg.epochs {
            batch_loss(model, train)?.as_f64()
        } else {
            epoch_loss / batches as f64
        };
        train_loss.push(check(epoch, recorded)?);
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            eval_epochs.push(epoch);
            test_rmse.push(check(epoch, evaluate_rmse(model, test)?.as_f64())?);
        }
        if let Some(obs) = observer.as_mut() {
            obs(epoch, model)?;
        }
    }

    let min_test_rmse = test_rmse.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ExperimentReport {
        model: model.kind().to_string(),
        num_params: model.num_params(),
        epochs: cfg.epochs,
        seed: cfg.seed,
        final_train_mse: *train_loss.last().expect("non-empty"),
        final_test_rmse: *test_rmse.last().expect("non-empty"),
        min_test_rmse,
        train_loss,
        eval_epochs,
        test_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{BlockShape, MlpParams, SgnConfig, SgnParams};
    use crate::training::Optimizer;
    use crate::Activation;

    fn line_data() -> Dataset<f64> {
        let xs: Vec<f64> = (0..40).map(|i| -1.0 + i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.7 * x - 0.2).collect();
        Dataset::from_scalar(&xs, &ys).unwrap()
    }

    #[test]
    fn zero_target_zero_output_layer() {
        let mut p: MlpParams<f64> = MlpParams::init(BlockShape::ffn(1, 4), Activation::Gelu, &mut Rng::new(0));
        p.w2.fill(0.0);
        let xs = [0.1, 0.5, -0.3];
        let data = Dataset::from_scalar(&xs, &[0.0; 3]).unwrap();
        let cfg = TrainConfig { epochs: 1, ..Default::default() };
        let r = train_regression(&mut p, &data, &data, &cfg, None).unwrap();
        assert_eq!(r.train_loss[0], 0.0);
    }

    #[test]
    fn linear_toy_loss_decreases() {
        // relu with a positive bias shift is linear on the data range
        let mut p: MlpParams<f64> = MlpParams::init(BlockShape::ffn(1, 1), Activation::Relu, &mut Rng::new(3));
        p.w1.set(0, 0, 1.0);
        p.b1[0] = 2.0;
        let data = line_data();
        let cfg = TrainConfig { epochs: 50, ..Default::default() };
        let r = train_regression(&mut p, &data, &data, &cfg, None).unwrap();
        assert!(r.train_loss[50] < r.train_loss[0]);
    }

    #[test]
    fn reruns_are_identical() {
        let run = || {
            let mut cfg = SgnConfig::new(BlockShape { d_in: 1, d_ff: 8, d_out: 1 }, 3);
            cfg.seed = 5;
            let mut p: SgnParams<f64> = SgnParams::from_config(&cfg).unwrap();
            let tc = TrainConfig { epochs: 20, batch_size: Some(7), seed: 9, ..Default::default() };
            let r = train_regression(&mut p, &line_data(), &line_data(), &tc, None).unwrap();
            (serde_json::to_string(&r).unwrap(), p.to_flat())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut p: MlpParams<f64> = MlpParams::init(BlockShape::ffn(1, 4), Activation::Relu, &mut Rng::new(1));
        let cfg = TrainConfig { epochs: 200, learning_rate: 1e3, optimizer: Optimizer::Sgd, ..Default::default() };
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x * 1e3).collect();
        let data = Dataset::from_scalar(&xs, &ys).unwrap();
        match train_regression(&mut p, &data, &data, &cfg, None) {
            Err(Error::Training { epoch, .. }) => assert!(epoch >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn observer_sees_every_epoch() {
        let mut p: MlpParams<f64> = MlpParams::init(BlockShape::ffn(1, 2), Activation::Gelu, &mut Rng::new(1));
        let mut seen = Vec::new();
        let mut obs = |e: usize, _: &MlpParams<f64>| {
            seen.push(e);
            Ok(())
        };
        let cfg = TrainConfig { epochs: 4, eval_every: 2, ..Default::default() };
        let r = train_regression(&mut p, &line_data(), &line_data(), &cfg, Some(&mut obs)).unwrap();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert_eq!(r.eval_epochs, vec![0, 2, 4]);
        assert_eq!(r.curves_csv().lines().count(), 6);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::<f64>::new(vec![vec![1.0]], vec![]).is_err());
        assert!(Dataset::<f64>::new(vec![vec![1.0], vec![1.0, 2.0]], vec![vec![0.0], vec![0.0]]).is_err());
    }
}
