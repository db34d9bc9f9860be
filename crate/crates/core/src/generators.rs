//! The artificial benchmark sets AD1-AD6 and their true quantile functions.
//!
//! Inputs are drawn from U(-5, 5) and targets are
//! `(1 - x + 2x^2) exp(-x^2 / 2) + noise` with
//! AD1 N(0, 0.6), AD2 chi2(3), AD3 N(0, 0.4), AD4 N(0, 0.8), AD5 U(-5, 5)
//! and AD6 U(-4, 4).

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::stats::{chi2_quantile, seeded_stream, standard_normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdSet {
    AD1,
    AD2,
    AD3,
    AD4,
    AD5,
    AD6,
}

impl AdSet {
    pub const ALL: [AdSet; 6] = [AdSet::AD1, AdSet::AD2, AdSet::AD3, AdSet::AD4, AdSet::AD5, AdSet::AD6];
}

impl fmt::Display for AdSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for AdSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "AD1" => Ok(AdSet::AD1),
            "AD2" => Ok(AdSet::AD2),
            "AD3" => Ok(AdSet::AD3),
            "AD4" => Ok(AdSet::AD4),
            "AD5" => Ok(AdSet::AD5),
            "AD6" => Ok(AdSet::AD6),
            _ => invalid(format!("unknown artificial dataset {s:?} (expected AD1..AD6)")),
        }
    }
}

/// How the second parameter of `N(0, s)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalScale {
    #[default]
    StdDev,
    Variance,
}

impl fmt::Display for NormalScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalScale::StdDev => "stddev",
            NormalScale::Variance => "variance",
        })
    }
}

impl FromStr for NormalScale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stddev" | "std" | "sd" => Ok(NormalScale::StdDev),
            "variance" | "var" => Ok(NormalScale::Variance),
            _ => invalid(format!("unknown noise scale {s:?} (expected stddev or variance)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Noise {
    Normal(f64),
    ChiSquared3,
    Uniform(f64),
}

fn noise_of(id: AdSet, scale: NormalScale) -> Noise {
    let normal = |s: f64| match scale {
        NormalScale::StdDev => Noise::Normal(s),
        NormalScale::Variance => Noise::Normal(s.sqrt()),
    };
    match id {
        AdSet::AD1 => normal(0.6),
        AdSet::AD2 => Noise::ChiSquared3,
        AdSet::AD3 => normal(0.4),
        AdSet::AD4 => normal(0.8),
        AdSet::AD5 => Noise::Uniform(5.0),
        AdSet::AD6 => Noise::Uniform(4.0),
    }
}

pub fn mean_function(x: f64) -> f64 {
    (1.0 - x + 2.0 * x * x) * (-0.5 * x * x).exp()
}

fn sample_noise<R: Rng>(noise: Noise, rng: &mut R) -> f64 {
    match noise {
        Noise::Normal(sd) => {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        }
        Noise::ChiSquared3 => (0..3)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * z
            })
            .sum(),
        Noise::Uniform(h) => rng.random_range(-h..h),
    }
}

pub fn generate_ad(id: AdSet, m: usize, seed: u64) -> Result<Dataset> {
    generate_ad_with(id, m, seed, NormalScale::default())
}

pub fn generate_ad_with(id: AdSet, m: usize, seed: u64, scale: NormalScale) -> Result<Dataset> {
    if m == 0 {
        return invalid("m must be positive");
    }
    let noise = noise_of(id, scale);
    let mut rng = seeded_stream(seed, 0);
    let mut x = Array2::zeros((m, 1));
    let mut y = Array1::zeros(m);
    for i in 0..m {
        let xi: f64 = rng.random_range(-5.0..5.0);
        x[[i, 0]] = xi;
        y[i] = mean_function(xi) + sample_noise(noise, &mut rng);
    }
    Dataset::new(x, y)?.with_column_names(vec!["x".to_owned()])
}

pub fn true_quantile(id: AdSet, q: f64, x: &[f64]) -> Result<f64> {
    true_quantile_with(id, q, x, NormalScale::default())
}

pub fn true_quantile_with(id: AdSet, q: f64, x: &[f64], scale: NormalScale) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("quantile level must lie in (0, 1), got {q}"));
    }
    if x.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: x.len(),
        });
    }
    let noise_q = match noise_of(id, scale) {
        Noise::Normal(sd) => sd * standard_normal_quantile(q),
        Noise::ChiSquared3 => chi2_quantile(3.0, q),
        Noise::Uniform(h) => -h + 2.0 * h * q,
    };
    Ok(mean_function(x[0]) + noise_q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_true_quantiles() {
        assert_eq!(mean_function(0.0), 1.0);
        assert!((true_quantile(AdSet::AD5, 0.5, &[0.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((true_quantile(AdSet::AD6, 0.975, &[0.0]).unwrap() - 4.8).abs() < 1e-12);
        let ad1 = true_quantile(AdSet::AD1, 0.975, &[0.0]).unwrap();
        assert!((ad1 - (1.0 + 1.959963984540054 * 0.6)).abs() < 1e-9);
        let var = true_quantile_with(AdSet::AD1, 0.975, &[0.0], NormalScale::Variance).unwrap();
        assert!((var - (1.0 + 1.959963984540054 * 0.6f64.sqrt())).abs() < 1e-9);
        assert!(true_quantile(AdSet::AD1, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn names_parse() {
        assert_eq!("ad3".parse::<AdSet>().unwrap(), AdSet::AD3);
        assert!("AD7".parse::<AdSet>().is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate_ad(AdSet::AD2, 50, 3).unwrap();
        let b = generate_ad(AdSet::AD2, 50, 3).unwrap();
        let c = generate_ad(AdSet::AD2, 50, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.inputs.iter().all(|x| (-5.0..5.0).contains(x)));
    }

    #[test]
    fn chi2_noise_mean() {
        let d = generate_ad(AdSet::AD2, 100_000, 1).unwrap();
        let m: f64 = (0..d.len()).map(|i| d.targets[i] - mean_function(d.inputs[[i, 0]])).sum::<f64>() / d.len() as f64;
        assert!((m - 3.0).abs() < 0.05, "{m}");
    }

    #[test]
    fn quantiles_monotone_in_level() {
        for id in AdSet::ALL {
            let mut prev = f64::NEG_INFINITY;
            for k in 1..20 {
                let v = true_quantile(id, k as f64 / 20.0, &[0.7]).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }
}
