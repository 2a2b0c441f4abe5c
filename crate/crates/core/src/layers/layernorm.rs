use crate::numkit::Scalar;

/// Epsilon added to the per-token variance.
pub const LN_EPS: f64 = 1e-5;

/// Per-token normalization statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct LnStats<T> {
    pub mean: T,
    pub inv_std: T,
    /// `(u - mean) * inv_std`
    pub normalized: Vec<T>,
}

/// LayerNorm over the channels of one token, with affine `(gamma, beta)`.
///
/// A constant input has zero variance; the epsilon keeps `inv_std` finite and
/// the output collapses to `beta`.
pub fn layer_norm<T: Scalar>(u: &[T], gamma: &[T], beta: &[T]) -> (Vec<T>, LnStats<T>) {
    let n = T::from_usize_lossy(u.len());
    let mean = u.iter().copied().sum::<T>() / n;
    let var = u.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let inv_std = T::one() / (var + T::lit(LN_EPS)).sqrt();
    let normalized: Vec<T> = u.iter().map(|&v| (v - mean) * inv_std).collect();
    let out = normalized
        .iter()
        .zip(gamma.iter().zip(beta))
        .map(|(&h, (&g, &b))| g * h + b)
        .collect();
    (
        out,
        LnStats {
            mean,
            inv_std,
            normalized,
        },
    )
}

/// Gradient with respect to the LayerNorm input, given the gradient with
/// respect to the normalized values `d_hat`:
/// `du = inv_std * (d_hat - mean(d_hat) - hat * mean(d_hat * hat))`.
pub fn layer_norm_backward<T: Scalar>(d_hat: &[T], stats: &LnStats<T>) -> Vec<T> {
    let n = T::from_usize_lossy(d_hat.len());
    let mean_d = d_hat.iter().copied().sum::<T>() / n;
    let mean_dh = d_hat
        .iter()
        .zip(&stats.normalized)
        .map(|(&d, &h)| d * h)
        .sum::<T>()
        / n;
    d_hat
        .iter()
        .zip(&stats.normalized)
        .map(|(&d, &h)| stats.inv_std * (d - mean_d - h * mean_dh))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{finite_diff_grad, Rng};

    #[test]
    fn constant_input_returns_beta() {
        let (out, stats) = layer_norm(&[3.0f64; 4], &[2.0; 4], &[0.5, -1.0, 0.0, 7.0]);
        assert_eq!(out, vec![0.5, -1.0, 0.0, 7.0]);
        assert!(stats.inv_std.is_finite());
    }

    #[test]
    fn two_channel_example() {
        let (out, _) = layer_norm(&[1.0f64, -1.0], &[1.0, 1.0], &[0.0, 0.0]);
        let want = 1.0 / (1.0f64 + 1e-5).sqrt();
        assert!((out[0] - want).abs() < 1e-15);
        assert!((out[1] + want).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = Rng::new(12);
        for n in [2usize, 3, 7] {
            let u: Vec<f64> = (0..n).map(|_| rng.gaussian(0.0, 2.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gaussian(0.0, 1.0)).collect();
            let ones = vec![1.0; n];
            let zeros = vec![0.0; n];
            let loss = |v: &[f64]| {
                let (o, _) = layer_norm(v, &ones, &zeros);
                o.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
            };
            let fd = finite_diff_grad(loss, &u, 1e-6).unwrap();
            let (_, stats) = layer_norm(&u, &ones, &zeros);
            let an = layer_norm_backward(&w, &stats);
            for (a, b) in an.iter().zip(&fd) {
                assert!((a - b).abs() < 1e-7);
            }
        }
    }
}
