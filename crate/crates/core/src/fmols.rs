//! Panel fully modified OLS for a static long-run relation with entity
//! intercepts.
//!
//! Each entity's OLS residual and regressor differences feed a Bartlett
//! long-run covariance; the dependent variable is purged of its long-run
//! correlation with the regressor innovations and a bias term removes the
//! remaining serial-correlation effect. The pooled estimator sums the
//! corrected moment matrices across entities; the grouped estimator
//! averages the entity estimates.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coint::CointSpec;
use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regress::{long_run_covariance, RANK_TOLERANCE};
use crate::stats::Tail;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FmolsMode {
    Pooled,
    Grouped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FmolsOptions {
    /// Zero the off-diagonal long-run covariances between the residual and
    /// the regressor innovations, which turns both corrections off.
    pub zero_corrections: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FmolsEntityFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Long-run covariance of (residual, Δx).
    pub omega: DMatrix<f64>,
    /// Conditional long-run variance of the residual given Δx.
    pub omega_u_x: f64,
    pub n_obs: usize,
    /// Residual long-run variance is zero to working precision.
    pub perfect_fit: bool,
    sxx: DMatrix<f64>,
    sxy_plus: DVector<f64>,
}

/// FMOLS for one entity. `y` and `x` are levels; entity means are removed
/// on the estimation sample `t = 1 .. T-1` (the first observation is used
/// only for `Δx`).
pub fn fmols_entity(y: &[f64], x: &DMatrix<f64>, bandwidth: usize, options: FmolsOptions) -> Result<FmolsEntityFit> {
    let t_len = y.len();
    let m = x.ncols();
    if x.nrows() != t_len {
        return Err(Error::DimensionMismatch(format!(
            "{t_len} observations but {} regressor rows",
            x.nrows()
        )));
    }
    let needed = m + bandwidth + 3;
    if t_len < needed {
        return Err(Error::TooFewPeriods { needed, got: t_len });
    }
    let n = t_len - 1;
    let y_mean = y[1..].iter().sum::<f64>() / n as f64;
    let yd = DVector::from_fn(n, |t, _| y[t + 1] - y_mean);
    let xd = DMatrix::from_fn(n, m, |t, j| {
        let mu = (1..t_len).map(|s| x[(s, j)]).sum::<f64>() / n as f64;
        x[(t + 1, j)] - mu
    });
    let dx = DMatrix::from_fn(n, m, |t, j| x[(t + 1, j)] - x[(t, j)]);

    let sxx = xd.transpose() * &xd;
    let sxx_inv = invert_checked(&sxx)?;
    let beta_ols = &sxx_inv * (xd.transpose() * &yd);
    let u = &yd - &xd * &beta_ols;

    let xi = DMatrix::from_fn(n, 1 + m, |t, c| if c == 0 { u[t] } else { dx[(t, c - 1)] });
    let lrv = long_run_covariance(&xi, bandwidth, true)?;
    let mut omega = lrv.omega.clone();
    let mut delta = lrv.one_sided();
    if options.zero_corrections {
        for j in 1..=m {
            omega[(0, j)] = 0.0;
            omega[(j, 0)] = 0.0;
            delta[(0, j)] = 0.0;
            delta[(j, 0)] = 0.0;
        }
    }
    let omega_xx = omega.view((1, 1), (m, m)).clone_owned();
    let omega_xu = DVector::from_fn(m, |j, _| omega[(j + 1, 0)]);
    let delta_xx = delta.view((1, 1), (m, m)).clone_owned();
    let delta_xu = DVector::from_fn(m, |j, _| delta[(j + 1, 0)]);
    let omega_xx_inv = invert_checked(&omega_xx)?;
    let gain = &omega_xx_inv * &omega_xu;

    let y_plus = &yd - &dx * &gain;
    let delta_plus = &delta_xu - &delta_xx * &gain;
    let sxy_plus = xd.transpose() * y_plus - delta_plus * n as f64;
    let beta = &sxx_inv * &sxy_plus;

    let omega_u_x = omega[(0, 0)] - omega_xu.dot(&gain);
    let scale = omega[(0, 0)].abs().max(lrv.sigma[(0, 0)].abs());
    let yscale = yd.dot(&yd) / n as f64;
    let perfect_fit = omega_u_x <= 1e-20 * yscale.max(f64::MIN_POSITIVE) || scale == 0.0;
    let omega_u_x = omega_u_x.max(0.0);
    let standard_errors: Vec<f64> = (0..m).map(|j| (omega_u_x * sxx_inv[(j, j)]).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t_stats = coefficients.iter().zip(&standard_errors).map(|(b, s)| b / s).collect();
    Ok(FmolsEntityFit {
        coefficients,
        standard_errors,
        t_stats,
        omega: lrv.omega,
        omega_u_x,
        n_obs: n,
        perfect_fit,
        sxx,
        sxy_plus,
    })
}

fn invert_checked(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.ncols();
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count();
    if smax == 0.0 || rank < k {
        return Err(Error::RankDeficient { rank, cols: k });
    }
    m.clone()
        .try_inverse()
        .ok_or(Error::RankDeficient { rank, cols: k })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmolsEntityReport {
    pub entity: String,
    pub coefficients: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Row-major long-run covariance of (residual, Δx).
    pub omega: Vec<Vec<f64>>,
    pub perfect_fit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmolsReport {
    pub mode: FmolsMode,
    pub regressors: Vec<String>,
    pub coefficients: Vec<f64>,
    pub t_stats: Vec<f64>,
    /// Two-sided normal p-values of `t_stats`.
    pub p_values: Vec<f64>,
    pub per_entity: Vec<FmolsEntityReport>,
    pub bandwidth: usize,
    pub n_obs_used: usize,
}

/// Panel FMOLS in pooled or grouped form.
pub fn fmols_panel(panel: &Panel, spec: &CointSpec, mode: FmolsMode) -> Result<FmolsReport> {
    fmols_panel_with(panel, spec, mode, FmolsOptions::default())
}

pub fn fmols_panel_with(panel: &Panel, spec: &CointSpec, mode: FmolsMode, options: FmolsOptions) -> Result<FmolsReport> {
    if spec.regressors.is_empty() {
        return Err(Error::InvalidParameters("at least one regressor required".into()));
    }
    let fits: Vec<FmolsEntityFit> = (0..panel.n_entities())
        .into_par_iter()
        .map(|e| {
            let (y, x) = crate::coint::entity_data(panel, e, spec)?;
            fmols_entity(&y, &x, spec.bandwidth, options).map_err(|err| err.in_entity(&panel.entities()[e]))
        })
        .collect::<Result<_>>()?;
    let n = fits.len() as f64;
    let m = spec.regressors.len();
    let (coefficients, t_stats): (Vec<f64>, Vec<f64>) = match mode {
        FmolsMode::Grouped => {
            let coefficients = (0..m).map(|j| fits.iter().map(|f| f.coefficients[j]).sum::<f64>() / n).collect();
            let t_stats = (0..m).map(|j| fits.iter().map(|f| f.t_stats[j]).sum::<f64>() / n.sqrt()).collect();
            (coefficients, t_stats)
        }
        FmolsMode::Pooled => {
            let mut sxx = DMatrix::zeros(m, m);
            let mut sxy = DVector::zeros(m);
            for f in &fits {
                sxx += &f.sxx;
                sxy += &f.sxy_plus;
            }
            let inv = invert_checked(&sxx)?;
            let beta = &inv * sxy;
            let omega_bar = fits.iter().map(|f| f.omega_u_x).sum::<f64>() / n;
            let coefficients: Vec<f64> = beta.iter().copied().collect();
            let t_stats = (0..m).map(|j| coefficients[j] / (omega_bar * inv[(j, j)]).sqrt()).collect();
            (coefficients, t_stats)
        }
    };
    let per_entity = fits
        .iter()
        .zip(panel.entities())
        .map(|(f, name)| FmolsEntityReport {
            entity: name.clone(),
            coefficients: f.coefficients.clone(),
            t_stats: f.t_stats.clone(),
            omega: f.omega.row_iter().map(|r| r.iter().copied().collect()).collect(),
            perfect_fit: f.perfect_fit,
        })
        .collect();
    let p_values = t_stats.iter().map(|&t| Tail::TwoSided.p_value(t)).collect();
    Ok(FmolsReport {
        mode,
        regressors: spec.regressors.clone(),
        coefficients,
        t_stats,
        p_values,
        per_entity,
        bandwidth: spec.bandwidth,
        n_obs_used: fits.iter().map(|f| f.n_obs).sum(),
    })
}
