use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{entity_data, CointReport, CointSpec, CointStatistic, TestFamily, VectorHomogeneity, MIN_EFFECTIVE_PERIODS};
use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regress::{long_run_covariance, ols, ols_named};
use crate::stats::Tail;

/// Kao statistic names in report order.
pub const KAO_STATISTICS: [&str; 5] = [
    "Modified Dickey-Fuller t",
    "Dickey-Fuller t",
    "Augmented Dickey-Fuller t",
    "Unadjusted modified Dickey-Fuller t",
    "Unadjusted Dickey-Fuller t",
];

fn demean_columns(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mu = m.column(j).mean();
        m.column_mut(j).add_scalar_mut(-mu);
    }
}

/// Kao (1999) residual-based test with a common cointegrating vector.
///
/// Residuals come from the pooled within regression of the dependent
/// variable on the regressors. All five statistics use the common sample
/// left after one lag and `aug_lags` augmentation lags, and are compared
/// with the left tail of N(0,1).
pub fn kao_test(panel: &Panel, spec: &CointSpec) -> Result<CointReport> {
    spec.validate(panel)?;
    if spec.vector_homogeneity != VectorHomogeneity::SameForAllPanels {
        return Err(Error::InvalidParameters(
            "Kao's test requires a cointegrating vector common to all panels".into(),
        ));
    }
    let n_t = panel.n_periods();
    let p = spec.aug_lags;
    let used = n_t.saturating_sub(1 + p);
    if used < MIN_EFFECTIVE_PERIODS {
        return Err(Error::TooFewPeriods {
            needed: MIN_EFFECTIVE_PERIODS + 1 + p,
            got: n_t,
        });
    }
    let n = panel.n_entities();
    let m = spec.regressors.len();

    // First stage: pooled within regression with a common slope.
    let data: Vec<(Vec<f64>, DMatrix<f64>)> = (0..n).map(|e| entity_data(panel, e, spec)).collect::<Result<_>>()?;
    let mut y_within = Vec::with_capacity(n * n_t);
    let mut x_within = DMatrix::zeros(n * n_t, m);
    for (e, (y, x)) in data.iter().enumerate() {
        let ym = y.iter().sum::<f64>() / n_t as f64;
        y_within.extend(y.iter().map(|v| v - ym));
        let mut xd = x.clone();
        demean_columns(&mut xd);
        x_within.rows_mut(e * n_t, n_t).copy_from(&xd);
    }
    let first = ols(&y_within, &x_within, false)?;
    let resid: Vec<&[f64]> = first.residuals.chunks(n_t).collect();

    // Pooled DF and ADF regressions on the common sample t = p+1 .. T-1.
    let rows = n * used;
    let mut level = Vec::with_capacity(rows);
    let mut lagged = Vec::with_capacity(rows);
    let mut aug = DMatrix::zeros(rows, p + 1);
    for (e, r) in resid.iter().enumerate() {
        for (k, t) in (p + 1..n_t).enumerate() {
            let row = e * used + k;
            level.push(r[t]);
            lagged.push(r[t - 1]);
            aug[(row, 0)] = r[t - 1];
            for j in 1..=p {
                aug[(row, j)] = r[t - j] - r[t - j - 1];
            }
        }
    }
    let df = ols(&level, &DMatrix::from_column_slice(rows, 1, &lagged), false)?;
    let rho = df.coefficients[0];
    let t_rho = (rho - 1.0) / df.standard_errors[0];
    let names: Vec<String> = (0..=p).map(|j| format!("a{j}")).collect();
    let adf = ols_named(&level, &aug, &names, false)?;
    let t_adf = (adf.coefficients[0] - 1.0) / adf.standard_errors[0];

    // Nuisance parameters from (DF residual, Δx) per entity, averaged.
    let per_entity: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..n)
        .into_par_iter()
        .map(|e| {
            let x = &data[e].1;
            let w = DMatrix::from_fn(used, 1 + m, |k, c| {
                let t = p + 1 + k;
                if c == 0 {
                    df.residuals[e * used + k]
                } else {
                    x[(t, c - 1)] - x[(t - 1, c - 1)]
                }
            });
            long_run_covariance(&w, spec.bandwidth, true).map(|l| (l.sigma, l.omega))
        })
        .collect::<Result<_>>()?;
    let mut sigma = DMatrix::zeros(1 + m, 1 + m);
    let mut omega = DMatrix::zeros(1 + m, 1 + m);
    for (s, o) in &per_entity {
        sigma += s;
        omega += o;
    }
    sigma /= n as f64;
    omega /= n as f64;
    let sigma2_v = conditional_variance(&sigma)?;
    let sigma2_0v = conditional_variance(&omega)?;

    let nf = n as f64;
    let tf = used as f64;
    let sn = nf.sqrt();
    let ratio = sigma2_v / sigma2_0v;
    let df_rho = (sn * tf * (rho - 1.0) + 3.0 * sn) / 10.2f64.sqrt();
    let df_t = 1.25f64.sqrt() * t_rho + (1.875 * nf).sqrt();
    let df_rho_star = (sn * tf * (rho - 1.0) + 3.0 * sn * ratio) / (3.0 + 36.0 * ratio * ratio / 5.0).sqrt();
    let shift = (6.0 * nf).sqrt() * ratio.sqrt() / 2.0;
    let denom = (1.0 / (2.0 * ratio) + 3.0 * ratio / 10.0).sqrt();
    let df_t_star = (t_rho + shift) / denom;
    let adf_star = (t_adf + shift) / denom;

    let values = [df_rho_star, df_t_star, adf_star, df_rho, df_t];
    let statistics = KAO_STATISTICS
        .iter()
        .zip(values)
        .map(|(name, v)| CointStatistic::new(name, v, Tail::Left))
        .collect();
    let mut warnings = Vec::new();
    if n == 1 {
        warnings.push("single entity: Kao asymptotics assume many panels".to_string());
    }
    Ok(CointReport {
        test_family: TestFamily::Kao,
        statistics,
        n_panels: n,
        n_periods_used: used,
        spec: spec.clone(),
        standardization: None,
        warnings,
    })
}

/// `S_uu − S_ux S_xx^{-1} S_xu` with `u` in position 0.
fn conditional_variance(s: &DMatrix<f64>) -> Result<f64> {
    let k = s.ncols() - 1;
    let sxx = s.view((1, 1), (k, k)).clone_owned();
    let sxu = DVector::from_iterator(k, (1..=k).map(|i| s[(i, 0)]));
    let inv = sxx
        .try_inverse()
        .ok_or(Error::RankDeficient { rank: 0, cols: k })?;
    let v = s[(0, 0)] - (sxu.transpose() * inv * &sxu)[(0, 0)];
    if !(v > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "non-positive conditional long-run variance {v}"
        )));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coint::PanelDeterministic;
    use crate::panel::Period;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn panel(n: usize, t: usize, seed: u64, cointegrated: bool) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ys = Vec::new();
        let mut xs = Vec::new();
        for _ in 0..n {
            let mut x = 0.0;
            let mut yrw = 0.0;
            let mut xv = Vec::new();
            let mut yv = Vec::new();
            for _ in 0..t {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                x += a;
                yrw += b;
                xv.push(x);
                yv.push(if cointegrated { 1.0 + 2.0 * x + b } else { yrw });
            }
            ys.push(yv);
            xs.push(xv);
        }
        Panel::from_series(
            (0..n).map(|i| format!("E{i}")).collect(),
            Period::new(2000, 1).unwrap(),
            vec!["y".into(), "x".into()],
            vec![ys, xs],
        )
        .unwrap()
    }

    #[test]
    fn reports_five_statistics_and_sample() {
        let p = panel(6, 41, 1, true);
        let r = kao_test(&p, &CointSpec::kao("y", &["x"])).unwrap();
        assert_eq!(r.n_periods_used, 39);
        assert_eq!(r.n_panels, 6);
        let names: Vec<&str> = r.statistics.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, KAO_STATISTICS);
        assert!(r.statistics.iter().all(|s| (0.0..=1.0).contains(&s.p_value)));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn collapse_without_corrections() {
        let p = panel(5, 30, 2, false);
        let mut spec = CointSpec::kao("y", &["x"]);
        spec.bandwidth = 0;
        spec.aug_lags = 0;
        let r = kao_test(&p, &spec).unwrap();
        let v: Vec<f64> = r.statistics.iter().map(|s| s.value).collect();
        assert!((v[0] - v[3]).abs() < 1e-12, "{} vs {}", v[0], v[3]);
        assert!((v[1] - v[4]).abs() < 1e-12, "{} vs {}", v[1], v[4]);
    }

    #[test]
    fn rejects_wrong_homogeneity_and_short_panels() {
        let p = panel(3, 41, 3, true);
        let mut spec = CointSpec::kao("y", &["x"]);
        spec.vector_homogeneity = VectorHomogeneity::PanelSpecific;
        assert!(matches!(kao_test(&p, &spec), Err(Error::InvalidParameters(_))));
        let short = panel(3, 9, 4, true);
        assert!(matches!(
            kao_test(&short, &CointSpec::kao("y", &["x"])),
            Err(Error::TooFewPeriods { .. })
        ));
        let mut spec = CointSpec::kao("y", &["x"]);
        spec.deterministic = PanelDeterministic::PanelMeans;
        assert!(kao_test(&p, &spec).is_ok());
    }

    #[test]
    fn single_entity_flagged() {
        let p = panel(1, 41, 5, true);
        let r = kao_test(&p, &CointSpec::kao("y", &["x"])).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn scale_and_permutation_invariance() {
        let p = panel(4, 41, 6, false);
        let spec = CointSpec::kao("y", &["x"]);
        let base = kao_test(&p, &spec).unwrap();
        let ys: Vec<Vec<f64>> = (0..4).map(|e| p.series(e, "y").unwrap().iter().map(|v| v * 7.5).collect()).collect();
        let scaled = kao_test(&p.replace_variable("y", ys).unwrap(), &spec).unwrap();
        for (a, b) in base.statistics.iter().zip(&scaled.statistics) {
            assert!((a.value - b.value).abs() < 1e-8);
        }
        let order = [3usize, 1, 0, 2];
        let reordered = Panel::from_series(
            order.iter().map(|&e| p.entities()[e].clone()).collect(),
            p.periods()[0],
            p.variables().to_vec(),
            (0..2).map(|v| order.iter().map(|&e| p.series_at(e, v).to_vec()).collect()).collect(),
        )
        .unwrap();
        assert_eq!(kao_test(&reordered, &spec).unwrap().statistics, base.statistics);
    }
}
