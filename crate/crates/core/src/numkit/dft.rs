use super::Scalar;
use crate::error::{shape_err, Result};

/// One-sided magnitude spectrum of a real signal.
///
/// Uses the direct transform with `1/n` normalization,
/// `X_k = (1/n) sum_j x_j exp(-2 pi i j k / n)`, and returns `|X_k|` for
/// `k = 0..=n/2`. With uniform spacing `dx`, bin `k` is frequency
/// `k / (n dx)`. A unit-amplitude sine on an exact bin has magnitude `1/2`.
pub fn dft_magnitudes<T: Scalar>(samples: &[T]) -> Result<Vec<T>> {
    let n = check_len(samples)?;
    let table = twiddles::<T>(n);
    Ok((0..=n / 2).map(|k| bin_magnitude(samples, k, &table)).collect())
}

/// `|X_k|` for a single bin, same normalization as [`dft_magnitudes`].
pub fn dft_magnitude_at<T: Scalar>(samples: &[T], k: usize) -> Result<T> {
    let n = check_len(samples)?;
    let step = T::TAU() / T::from_usize_lossy(n);
    let mut re = T::zero();
    let mut im = T::zero();
    for (j, &x) in samples.iter().enumerate() {
        let (sin, cos) = (step * T::from_usize_lossy((j * k) % n)).sin_cos();
        re += x * cos;
        im -= x * sin;
    }
    Ok((re * re + im * im).sqrt() / T::from_usize_lossy(n))
}

fn check_len<T>(samples: &[T]) -> Result<usize> {
    let n = samples.len();
    if n < 2 {
        return Err(shape_err(format!("DFT needs at least 2 samples, got {n}")));
    }
    Ok(n)
}

/// `(cos, sin)` of `2 pi r / n` for `r = 0..n`.
fn twiddles<T: Scalar>(n: usize) -> Vec<(T, T)> {
    let step = T::TAU() / T::from_usize_lossy(n);
    (0..n)
        .map(|r| {
            let (s, c) = (step * T::from_usize_lossy(r)).sin_cos();
            (c, s)
        })
        .collect()
}

fn bin_magnitude<T: Scalar>(samples: &[T], k: usize, table: &[(T, T)]) -> T {
    let n = samples.len();
    let mut re = T::zero();
    let mut im = T::zero();
    // j*k mod n keeps the angle exact
    let mut r = 0usize;
    for &x in samples {
        let (c, s) = table[r];
        re += x * c;
        im -= x * s;
        r = (r + k) % n;
    }
    (re * re + im * im).sqrt() / T::from_usize_lossy(n)
}

/// Parseval energy of a one-sided spectrum produced by [`dft_magnitudes`]:
/// `sum_j x_j^2 = n * (|X_0|^2 + 2 sum_{0<k<n/2} |X_k|^2 + |X_{n/2}|^2)`,
/// with the Nyquist bin counted once only when `n` is even.
pub fn one_sided_energy<T: Scalar>(bins: &[T], n: usize) -> T {
    let mut e = T::zero();
    for (k, &b) in bins.iter().enumerate() {
        let w = if k == 0 || (n % 2 == 0 && k == n / 2) {
            T::one()
        } else {
            T::lit(2.0)
        };
        e += w * b * b;
    }
    e * T::from_usize_lossy(n)
}
