use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ols::ols_named;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deterministic {
    None,
    #[default]
    Intercept,
    InterceptTrend,
}

impl Deterministic {
    pub fn n_terms(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Intercept => 1,
            Deterministic::InterceptTrend => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub aug_lags: usize,
    pub deterministic: Deterministic,
    /// `1 + ` the lagged-level coefficient.
    pub rho: f64,
    pub n_obs: usize,
}

/// Regress `Δx_t` on `x_{t-1}`, the deterministic terms and `aug_lags`
/// lagged differences; the statistic is the t-ratio on `x_{t-1}`.
pub fn adf_test(series: &[f64], aug_lags: usize, deterministic: Deterministic) -> Result<AdfResult> {
    let needed = aug_lags + 3 + deterministic.n_terms();
    if series.len() <= needed {
        return Err(Error::SequenceTooShort {
            needed,
            got: series.len(),
        });
    }
    let dx: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    // dx[i] = x[i+1] - x[i]; regression rows use dx[i] for i >= aug_lags.
    let rows = dx.len() - aug_lags;
    let n_cols = 1 + aug_lags + usize::from(deterministic == Deterministic::InterceptTrend);
    let mut names = vec!["lag_level".to_string()];
    names.extend((1..=aug_lags).map(|j| format!("lag_diff{j}")));
    if deterministic == Deterministic::InterceptTrend {
        names.push("trend".to_string());
    }
    let x = DMatrix::from_fn(rows, n_cols, |r, c| {
        let i = r + aug_lags;
        match c {
            0 => series[i],
            c if c <= aug_lags => dx[i - c],
            _ => (i + 1) as f64,
        }
    });
    let y = &dx[aug_lags..];
    let fit = ols_named(y, &x, &names, deterministic != Deterministic::None)?;
    let j = usize::from(deterministic != Deterministic::None);
    Ok(AdfResult {
        statistic: fit.t_stats[j],
        aug_lags,
        deterministic,
        rho: 1.0 + fit.coefficients[j],
        n_obs: rows,
    })
}

/// MacKinnon (2010) response-surface critical value for the single-series
/// ADF t test at level 0.01, 0.05 or 0.10 with `n_obs` observations.
pub fn adf_critical_value(deterministic: Deterministic, level: f64, n_obs: usize) -> Result<f64> {
    const NC: [[f64; 4]; 3] = [
        [-2.56574, -2.2358, -3.627, 0.0],
        [-1.94100, -0.2686, -3.365, 31.223],
        [-1.61682, 0.2656, -2.714, 25.364],
    ];
    const C: [[f64; 4]; 3] = [
        [-3.43035, -6.5393, -16.786, -79.433],
        [-2.86154, -2.8903, -4.234, -40.040],
        [-2.56677, -1.5384, -2.809, 0.0],
    ];
    const CT: [[f64; 4]; 3] = [
        [-3.95877, -9.0531, -28.428, -134.155],
        [-3.41049, -4.3904, -9.036, -45.374],
        [-3.12705, -2.5856, -3.925, -22.380],
    ];
    let row = match level {
        l if (l - 0.01).abs() < 1e-12 => 0,
        l if (l - 0.05).abs() < 1e-12 => 1,
        l if (l - 0.10).abs() < 1e-12 => 2,
        _ => {
            return Err(Error::InvalidParameters(format!(
                "critical values tabulated at 0.01, 0.05, 0.10 only, got {level}"
            )))
        }
    };
    let b = match deterministic {
        Deterministic::None => NC[row],
        Deterministic::Intercept => C[row],
        Deterministic::InterceptTrend => CT[row],
    };
    let inv = 1.0 / n_obs as f64;
    Ok(b[0] + b[1] * inv + b[2] * inv * inv + b[3] * inv * inv * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ols;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = rho * x + e;
                x
            })
            .collect()
    }

    #[test]
    fn zero_lags_is_plain_dickey_fuller() {
        let x = ar1(1.0, 60, 9);
        let adf = adf_test(&x, 0, Deterministic::Intercept).unwrap();
        let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let lag = DMatrix::from_column_slice(59, 1, &x[..59]);
        let fit = ols(&dx, &lag, true).unwrap();
        assert!((adf.statistic - fit.t_stats[1]).abs() < 1e-12);
        assert!((adf.rho - 1.0 - fit.coefficients[1]).abs() < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            adf_test(&[1.0, 2.0, 3.0, 4.0], 1, Deterministic::Intercept),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn critical_values() {
        let cv = adf_critical_value(Deterministic::Intercept, 0.05, 10_000_000).unwrap();
        assert!((cv + 2.86154).abs() < 1e-5);
        assert!(adf_critical_value(Deterministic::Intercept, 0.02, 100).is_err());
    }

    #[test]
    fn random_walk_rarely_rejects() {
        let cv = adf_critical_value(Deterministic::Intercept, 0.05, 199).unwrap();
        let accept = (0..1000)
            .filter(|&s| adf_test(&ar1(1.0, 200, s), 0, Deterministic::Intercept).unwrap().statistic > cv)
            .count();
        assert!(accept >= 900, "{accept}");
    }

    #[test]
    fn mean_reverting_series_rejects() {
        let cv = adf_critical_value(Deterministic::Intercept, 0.01, 199).unwrap();
        let reject = (0..1000)
            .filter(|&s| adf_test(&ar1(0.2, 200, 10_000 + s), 0, Deterministic::Intercept).unwrap().statistic < cv)
            .count();
        assert!(reject >= 950, "{reject}");
    }

    proptest! {
        #[test]
        fn scale_invariant(seed in any::<u64>(), c in 0.001f64..1000.0, lags in 0usize..4) {
            let x = ar1(0.9, 50, seed);
            let xc: Vec<f64> = x.iter().map(|v| v * c).collect();
            for det in [Deterministic::None, Deterministic::Intercept, Deterministic::InterceptTrend] {
                let a = adf_test(&x, lags, det).unwrap().statistic;
                let b = adf_test(&xc, lags, det).unwrap().statistic;
                prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }
        }
    }
}
