use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    Bartlett,
}

impl Kernel {
    /// Weight on autocovariance `lag` at the given bandwidth.
    pub fn weight(self, lag: usize, bandwidth: usize) -> f64 {
        match self {
            Kernel::Bartlett => {
                if lag > bandwidth {
                    0.0
                } else {
                    1.0 - lag as f64 / (bandwidth as f64 + 1.0)
                }
            }
        }
    }
}

/// Scalar long-run variance decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrvEstimate {
    /// Contemporaneous variance `T^{-1} Σ u_t²`.
    pub sigma2: f64,
    /// One-sided weighted autocovariance sum.
    pub lambda: f64,
    /// Two-sided long-run variance `sigma2 + 2 lambda`.
    pub omega2: f64,
    pub bandwidth: usize,
    pub kernel: Kernel,
}

/// Multivariate long-run covariance decomposition.
///
/// `lambda = Σ_{j=1..b} w_j Γ_j` with `Γ_j = T^{-1} Σ_t u_t u_{t-j}'`, and
/// `omega = sigma + lambda + lambda'`.
#[derive(Debug, Clone, PartialEq)]
pub struct LrvMatrix {
    pub sigma: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub omega: DMatrix<f64>,
    pub bandwidth: usize,
    pub kernel: Kernel,
}

impl LrvMatrix {
    /// `sigma + lambda'`: the one-sided sum including lag zero, oriented so
    /// that entry `(a, b)` accumulates `E[u_{t-j,a} u_{t,b}]` for `j ≥ 0`.
    pub fn one_sided(&self) -> DMatrix<f64> {
        &self.sigma + self.lambda.transpose()
    }
}

/// Bartlett long-run variance of a scalar sequence.
pub fn long_run_variance(u: &[f64], bandwidth: usize, demean: bool) -> Result<LrvEstimate> {
    if u.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mean = if demean {
        u.iter().sum::<f64>() / u.len() as f64
    } else {
        0.0
    };
    let v: Vec<f64> = u.iter().map(|x| x - mean).collect();
    let n = v.len() as f64;
    let sigma2 = v.iter().map(|x| x * x).sum::<f64>() / n;
    let mut lambda = 0.0;
    for j in 1..=bandwidth.min(v.len().saturating_sub(1)) {
        let g: f64 = v[j..].iter().zip(&v[..v.len() - j]).map(|(a, b)| a * b).sum::<f64>() / n;
        lambda += Kernel::Bartlett.weight(j, bandwidth) * g;
    }
    Ok(LrvEstimate {
        sigma2,
        lambda,
        omega2: sigma2 + 2.0 * lambda,
        bandwidth,
        kernel: Kernel::Bartlett,
    })
}

/// Bartlett long-run covariance of a `T × k` matrix whose rows are
/// observations.
pub fn long_run_covariance(u: &DMatrix<f64>, bandwidth: usize, demean: bool) -> Result<LrvMatrix> {
    let (t, k) = u.shape();
    if t == 0 || k == 0 {
        return Err(Error::EmptySequence);
    }
    let mut v = u.clone();
    if demean {
        for j in 0..k {
            let m = v.column(j).mean();
            v.column_mut(j).add_scalar_mut(-m);
        }
    }
    let n = t as f64;
    let sigma = v.transpose() * &v / n;
    let mut lambda = DMatrix::zeros(k, k);
    for j in 1..=bandwidth.min(t - 1) {
        let w = Kernel::Bartlett.weight(j, bandwidth);
        let lead = v.rows(j, t - j);
        let lagged = v.rows(0, t - j);
        lambda += (lead.transpose() * lagged) * (w / n);
    }
    let omega = &sigma + &lambda + lambda.transpose();
    Ok(LrvMatrix {
        sigma,
        lambda,
        omega,
        bandwidth,
        kernel: Kernel::Bartlett,
    })
}
