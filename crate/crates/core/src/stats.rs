//! Normal and chi-square tail probabilities and the significance-star
//! convention used in every report.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid standard normal")
}

pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Which tail(s) of the reference N(0,1) a statistic rejects in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tail {
    Left,
    Right,
    TwoSided,
}

impl Tail {
    pub fn p_value(self, z: f64) -> f64 {
        if !z.is_finite() {
            return match (self, z > 0.0) {
                (Tail::Left, true) | (Tail::Right, false) => 1.0,
                _ => 0.0,
            };
        }
        let p = match self {
            Tail::Left => normal_cdf(z),
            Tail::Right => 1.0 - normal_cdf(z),
            Tail::TwoSided => 2.0 * (1.0 - normal_cdf(z.abs())),
        };
        p.clamp(0.0, 1.0)
    }
}

pub fn chi2_quantile(p: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).expect("positive dof").inverse_cdf(p)
}

pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(x)
}

/// `***` below 1%, `**` below 5%, `*` below 10%.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}
