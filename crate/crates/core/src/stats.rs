//! Small statistical helpers: quantile functions, moments, seeded streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma_lr;

use crate::error::{invalid, Result};

/// Inverse empirical CDF: the `ceil(q m)`-th smallest value (`q = 0` gives
/// the minimum).
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return invalid("quantile of an empty sample");
    }
    if !(0.0..=1.0).contains(&q) {
        return invalid(format!("quantile level must lie in [0, 1], got {q}"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Ok(v[k - 1])
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(p)
}

/// Chi-squared CDF with `k` degrees of freedom.
pub fn chi2_cdf(k: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_lr(k / 2.0, x / 2.0)
    }
}

/// Chi-squared quantile by bisection on the CDF, to `1e-10` in `x`.
pub fn chi2_quantile(k: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut hi = k.max(1.0);
    while chi2_cdf(k, hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(k, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (denominator `n - 1`); 0 for fewer than two values.
pub fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    // Shifting by the first value keeps constant input at exactly zero.
    let shift = v[0];
    let mu = v.iter().map(|x| x - shift).sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - shift - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Independent generator for `(seed, stream)`: the ChaCha stream id splits
/// one seed into non-overlapping sequences.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn normal_quantile_values() {
        assert!((standard_normal_quantile(0.975) - 1.959963984540054).abs() < 1e-9);
        assert!((standard_normal_quantile(0.025) + standard_normal_quantile(0.975)).abs() < 1e-12);
    }

    #[test]
    fn chi2_quantile_inverts_cdf() {
        // Reference value: chi2(3) 97.5% point 9.348404.
        assert!((chi2_quantile(3.0, 0.975) - 9.348404).abs() < 1e-5);
        for &p in &[0.01, 0.3, 0.5, 0.9] {
            assert!((chi2_cdf(3.0, chi2_quantile(3.0, p)) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn moments_and_quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert_eq!(median(&v), 2.5);
        assert!((sample_std(&v) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_std(&[0.1; 10]), 0.0);
        assert_eq!(empirical_quantile(&v, 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(empirical_quantile(&v, 1.0).unwrap(), 4.0);
        assert!(empirical_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: Vec<u64> = (0..4).map({
            let mut r = seeded_stream(7, 1);
            move |_| r.random()
        }).collect();
        let b: Vec<u64> = (0..4).map({
            let mut r = seeded_stream(7, 1);
            move |_| r.random()
        }).collect();
        let c: u64 = seeded_stream(7, 2).random();
        assert_eq!(a, b);
        assert_ne!(a[0], c);
    }
}
