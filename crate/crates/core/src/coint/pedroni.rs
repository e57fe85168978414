use nalgebra::DMatrix;
use rayon::prelude::*;

use super::moments::{moments_for, MomentCase, StatKind};
use super::{
    entity_data, CointReport, CointSpec, CointStatistic, PanelDeterministic, Standardization, TestFamily,
    VectorHomogeneity, MIN_EFFECTIVE_PERIODS,
};
use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regress::{long_run_variance, ols};
use crate::stats::Tail;

pub const PEDRONI_PANEL_STATISTICS: [&str; 4] = [
    "Modified variance ratio",
    "Modified Phillips-Perron t",
    "Phillips-Perron t",
    "Augmented Dickey-Fuller t",
];

pub const PEDRONI_GROUP_STATISTICS: [&str; 3] = [
    "Modified Phillips-Perron t",
    "Phillips-Perron t",
    "Augmented Dickey-Fuller t",
];

/// Per-entity ingredients of the Pedroni statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedroniEntityTerms {
    /// Periods in the residual autoregression (`T − 1`).
    pub n_used: usize,
    /// Long-run variance of the differenced-regression residual.
    pub l11_sq: f64,
    /// One-sided long-run autocovariance of the AR(1) residual.
    pub lambda: f64,
    /// Contemporaneous variance of the AR(1) residual.
    pub s2: f64,
    /// Long-run variance of the AR(1) residual, `s2 + 2 lambda`.
    pub sigma2: f64,
    /// `Σ ê²_{t-1}`.
    pub sum_lag_sq: f64,
    /// `Σ ê_{t-1} Δê_t`.
    pub sum_cross: f64,
    /// Residual variance of the augmented regression.
    pub s2_adf: f64,
    /// `Σ ê*²_{t-1}` with lagged differences partialled out.
    pub sum_lag_sq_adf: f64,
    /// `Σ ê*_{t-1} Δê*_t` with lagged differences partialled out.
    pub sum_cross_adf: f64,
}

/// Entity-level first and second stages: levels regression with the
/// requested deterministics, the differenced regression for `L̂²₁₁`, and the
/// residual AR(1) and augmented regressions.
pub fn pedroni_entity_terms(
    y: &[f64],
    x: &DMatrix<f64>,
    deterministic: PanelDeterministic,
    bandwidth: usize,
    aug_lags: usize,
) -> Result<PedroniEntityTerms> {
    let t_len = y.len();
    let m = x.ncols();
    let trend = deterministic == PanelDeterministic::PanelMeansTrends;

    let levels = if trend {
        let mut l = x.clone().insert_column(m, 0.0);
        for t in 0..t_len {
            l[(t, m)] = (t + 1) as f64;
        }
        l
    } else {
        x.clone()
    };
    let e = ols(y, &levels, true)?.residuals;

    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let dx = DMatrix::from_fn(t_len - 1, m, |t, j| x[(t + 1, j)] - x[(t, j)]);
    let eta = ols(&dy, &dx, trend)?.residuals;
    let l11_sq = long_run_variance(&eta, bandwidth, false)?.omega2;

    let n_used = t_len - 1;
    let mut sum_lag_sq = 0.0;
    let mut sum_cross = 0.0;
    for t in 1..t_len {
        sum_lag_sq += e[t - 1] * e[t - 1];
        sum_cross += e[t - 1] * (e[t] - e[t - 1]);
    }
    let rho = (sum_lag_sq + sum_cross) / sum_lag_sq;
    let u: Vec<f64> = (1..t_len).map(|t| e[t] - rho * e[t - 1]).collect();
    let lrv = long_run_variance(&u, bandwidth, false)?;

    let (s2_adf, sum_lag_sq_adf, sum_cross_adf) = augmented_terms(&e, aug_lags)?;

    Ok(PedroniEntityTerms {
        n_used,
        l11_sq,
        lambda: lrv.lambda,
        s2: lrv.sigma2,
        sigma2: lrv.omega2,
        sum_lag_sq,
        sum_cross,
        s2_adf,
        sum_lag_sq_adf,
        sum_cross_adf,
    })
}

/// Augmented regression `Δê_t = γ ê_{t-1} + Σ_j c_j Δê_{t-j} + u*_t` on
/// `t = p+1 .. T-1`; returns the residual variance and the Frisch-Waugh
/// partialled sums for the lagged level.
fn augmented_terms(e: &[f64], p: usize) -> Result<(f64, f64, f64)> {
    let t_len = e.len();
    let rows = t_len - 1 - p;
    let de: Vec<f64> = (p + 1..t_len).map(|t| e[t] - e[t - 1]).collect();
    let lag: Vec<f64> = (p + 1..t_len).map(|t| e[t - 1]).collect();
    let (de_star, lag_star) = if p == 0 {
        (de, lag)
    } else {
        let z = DMatrix::from_fn(rows, p, |r, j| {
            let t = p + 1 + r;
            e[t - 1 - j] - e[t - 2 - j]
        });
        (ols(&de, &z, false)?.residuals, ols(&lag, &z, false)?.residuals)
    };
    let sum_lag_sq: f64 = lag_star.iter().map(|v| v * v).sum();
    let sum_cross: f64 = lag_star.iter().zip(&de_star).map(|(a, b)| a * b).sum();
    let gamma = sum_cross / sum_lag_sq;
    let rss: f64 = de_star
        .iter()
        .zip(&lag_star)
        .map(|(d, l)| (d - gamma * l).powi(2))
        .sum();
    Ok((rss / rows as f64, sum_lag_sq, sum_cross))
}

/// Raw (unstandardized) statistics in report order for the given
/// standardization.
pub(crate) fn raw_statistics(terms: &[PedroniEntityTerms], standardization: Standardization) -> Vec<(StatKind, f64)> {
    let n = terms.len() as f64;
    let t = terms[0].n_used as f64;
    match standardization {
        Standardization::Panel => {
            let mut a = 0.0;
            let mut b = 0.0;
            let mut a_adf = 0.0;
            let mut b_adf = 0.0;
            let mut c = 0.0;
            let mut c_adf = 0.0;
            for k in terms {
                a += k.sum_lag_sq / k.l11_sq;
                b += (k.sum_cross - t * k.lambda) / k.l11_sq;
                c += k.sigma2 / k.l11_sq;
                a_adf += k.sum_lag_sq_adf / k.l11_sq;
                b_adf += k.sum_cross_adf / k.l11_sq;
                c_adf += k.s2_adf / k.l11_sq;
            }
            c /= n;
            c_adf /= n;
            vec![
                (StatKind::PanelV, t * t * n.powf(1.5) / a),
                (StatKind::PanelRho, t * n.sqrt() * b / a),
                (StatKind::PanelT, b / (c * a).sqrt()),
                (StatKind::PanelAdf, b_adf / (c_adf * a_adf).sqrt()),
            ]
        }
        Standardization::Group => {
            let mut rho = 0.0;
            let mut pp = 0.0;
            let mut adf = 0.0;
            for k in terms {
                let num = k.sum_cross - t * k.lambda;
                rho += num / k.sum_lag_sq;
                pp += num / (k.sigma2 * k.sum_lag_sq).sqrt();
                adf += k.sum_cross_adf / (k.s2_adf * k.sum_lag_sq_adf).sqrt();
            }
            let sn = n.sqrt();
            vec![
                (StatKind::GroupRho, t * rho / sn),
                (StatKind::GroupT, pp / sn),
                (StatKind::GroupAdf, adf / sn),
            ]
        }
    }
}

/// Pedroni (1999, 2004) residual-based test with panel-specific vectors.
///
/// Each raw statistic is standardized as `(Z − μ√N)/√ν` with asymptotic
/// moments for the deterministic case and number of regressors, and
/// reported with a two-sided N(0,1) p-value.
pub fn pedroni_test(panel: &Panel, spec: &CointSpec, standardization: Standardization) -> Result<CointReport> {
    spec.validate(panel)?;
    if spec.vector_homogeneity != VectorHomogeneity::PanelSpecific {
        return Err(Error::InvalidParameters(
            "Pedroni's test estimates panel-specific cointegrating vectors".into(),
        ));
    }
    let n = panel.n_entities();
    if n < 2 {
        return Err(Error::TooFewEntities { needed: 2, got: n });
    }
    let n_t = panel.n_periods();
    let used = n_t.saturating_sub(1);
    if used.saturating_sub(spec.aug_lags) < MIN_EFFECTIVE_PERIODS {
        return Err(Error::TooFewPeriods {
            needed: MIN_EFFECTIVE_PERIODS + 1 + spec.aug_lags,
            got: n_t,
        });
    }
    let case = MomentCase {
        trend: spec.deterministic == PanelDeterministic::PanelMeansTrends,
        regressors: spec.regressors.len(),
    };
    let terms: Vec<PedroniEntityTerms> = (0..n)
        .into_par_iter()
        .map(|e| {
            let (y, x) = entity_data(panel, e, spec)?;
            pedroni_entity_terms(&y, &x, spec.deterministic, spec.bandwidth, spec.aug_lags)
                .map_err(|err| err.in_entity(&panel.entities()[e]))
        })
        .collect::<Result<_>>()?;

    let names: &[&str] = match standardization {
        Standardization::Panel => &PEDRONI_PANEL_STATISTICS,
        Standardization::Group => &PEDRONI_GROUP_STATISTICS,
    };
    let sn = (n as f64).sqrt();
    let statistics = raw_statistics(&terms, standardization)
        .into_iter()
        .zip(names)
        .map(|((kind, z), name)| {
            let mo = moments_for(case, kind)?;
            let value = (z - mo.mean * sn) / mo.variance.sqrt();
            Ok(CointStatistic::new(name, value, Tail::TwoSided))
        })
        .collect::<Result<_>>()?;

    Ok(CointReport {
        test_family: TestFamily::Pedroni,
        statistics,
        n_panels: n,
        n_periods_used: used,
        spec: spec.clone(),
        standardization: Some(standardization),
        warnings: Vec::new(),
    })
}
