//! Fixed-effect estimation of a panel error-correction regression with an
//! institutional-quality × capital-flow interaction.
//!
//! The regression is `D.HP` on the lagged levels `L.*` and lagged
//! differences `LD.*` of `HP`, `FLOW`, `INST_FLOW = INST × FLOW` and
//! `INTEREST`, with entity effects and optional period effects removed by
//! the within transform.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{Panel, Period};
use crate::regress::{ols_named, RegressionFit};
use crate::stats::Tail;

pub const DEPENDENT: &str = "HP";
pub const INTEREST: &str = "INTEREST";
pub const INTERACTION: &str = "INST_FLOW";
/// Periods consumed by one lag of a first difference.
pub const LAGS_CONSUMED: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct EcmDesign {
    /// `(entity, period)` of every row, entity-major.
    pub rows: Vec<(String, Period)>,
    pub entity_of_row: Vec<usize>,
    pub period_of_row: Vec<usize>,
    pub columns: Vec<String>,
    pub dependent_name: String,
    pub dependent: Vec<f64>,
    pub x: DMatrix<f64>,
    pub n_obs: usize,
    pub n_entities: usize,
    pub n_periods: usize,
    /// Columns that are identically zero.
    pub degenerate_columns: Vec<String>,
}

/// Design for `D.HP` on `L.` and `LD.` of HP, FLOW, INST_FLOW and INTEREST.
pub fn build_ecm_design(panel: &Panel, inst_variable: &str, flow_variable: &str) -> Result<EcmDesign> {
    build_ecm_design_with(panel, DEPENDENT, inst_variable, flow_variable, &[INTEREST])
}

/// As [`build_ecm_design`] with a chosen dependent variable and the list of
/// plain regressors that follow the interaction (the default is
/// `INTEREST` alone).
pub fn build_ecm_design_with(
    panel: &Panel,
    dependent: &str,
    inst_variable: &str,
    flow_variable: &str,
    others: &[&str],
) -> Result<EcmDesign> {
    let n_t = panel.n_periods();
    if n_t <= LAGS_CONSUMED {
        return Err(Error::TooFewPeriods { needed: LAGS_CONSUMED + 1, got: n_t });
    }
    let dep = panel.variable_index(dependent)?;
    let inst = panel.variable_index(inst_variable)?;
    let flow = panel.variable_index(flow_variable)?;
    let other_idx: Vec<usize> = others.iter().map(|v| panel.variable_index(v)).collect::<Result<_>>()?;

    let mut names = vec![dependent.to_string(), flow_variable.to_string(), INTERACTION.to_string()];
    names.extend(others.iter().map(|s| s.to_string()));
    let mut columns: Vec<String> = names.iter().map(|v| format!("L.{v}")).collect();
    columns.extend(names.iter().map(|v| format!("LD.{v}")));
    let k = names.len();

    let n = panel.n_entities();
    let used = n_t - LAGS_CONSUMED;
    let n_obs = n * used;
    let mut x = DMatrix::zeros(n_obs, 2 * k);
    let mut dependent_values = Vec::with_capacity(n_obs);
    let mut rows = Vec::with_capacity(n_obs);
    let mut entity_of_row = Vec::with_capacity(n_obs);
    let mut period_of_row = Vec::with_capacity(n_obs);
    for e in 0..n {
        let f = panel.series_at(e, flow);
        let g = panel.series_at(e, inst);
        let interaction: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        let mut series: Vec<&[f64]> = vec![panel.series_at(e, dep), f, &interaction];
        series.extend(other_idx.iter().map(|&v| panel.series_at(e, v)));
        let y = series[0];
        for t in LAGS_CONSUMED..n_t {
            let r = e * used + (t - LAGS_CONSUMED);
            dependent_values.push(y[t] - y[t - 1]);
            for (j, s) in series.iter().enumerate() {
                x[(r, j)] = s[t - 1];
                x[(r, k + j)] = s[t - 1] - s[t - 2];
            }
            rows.push((panel.entities()[e].clone(), panel.periods()[t]));
            entity_of_row.push(e);
            period_of_row.push(t - LAGS_CONSUMED);
        }
    }
    let degenerate_columns = columns
        .iter()
        .enumerate()
        .filter(|(j, _)| x.column(*j).iter().all(|&v| v == 0.0))
        .map(|(_, c)| c.clone())
        .collect();
    Ok(EcmDesign {
        rows,
        entity_of_row,
        period_of_row,
        columns,
        dependent_name: format!("D.{dependent}"),
        dependent: dependent_values,
        x,
        n_obs,
        n_entities: n,
        n_periods: used,
        degenerate_columns,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Covariance {
    #[default]
    Conventional,
    ClusterEntity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeEcmReport {
    pub dependent: String,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub entity_fe: bool,
    pub time_fe: bool,
    pub covariance: Covariance,
    pub n_obs: usize,
    pub n_entities: usize,
    pub r2_within: f64,
}

impl FeEcmReport {
    pub fn coefficient(&self, column: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == column).map(|j| self.coefficients[j])
    }
}

/// Remove entity means, and period means too when `time_fe`, by alternating
/// projections (one sweep suffices on a balanced design).
pub(crate) fn within(values: &mut [f64], entity: &[usize], period: &[usize], n_e: usize, n_p: usize, time_fe: bool) {
    let sweep = |values: &mut [f64], group: &[usize], n_g: usize| {
        let mut sum = vec![0.0; n_g];
        let mut count = vec![0usize; n_g];
        for (v, &g) in values.iter().zip(group) {
            sum[g] += v;
            count[g] += 1;
        }
        for (v, &g) in values.iter_mut().zip(group) {
            *v -= sum[g] / count[g] as f64;
        }
    };
    sweep(values, entity, n_e);
    if !time_fe {
        return;
    }
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for _ in 0..1000 {
        sweep(values, period, n_p);
        let before: Vec<f64> = values.to_vec();
        sweep(values, entity, n_e);
        let moved = values.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if moved < 1e-15 * scale {
            break;
        }
    }
}

pub fn fe_estimate(design: &EcmDesign, time_fe: bool) -> Result<FeEcmReport> {
    fe_estimate_with(design, time_fe, Covariance::Conventional)
}

pub fn fe_estimate_with(design: &EcmDesign, time_fe: bool, covariance: Covariance) -> Result<FeEcmReport> {
    let n = design.n_obs;
    let k = design.columns.len();
    let (ne, np) = (design.n_entities, design.n_periods);
    let mut y = design.dependent.clone();
    within(&mut y, &design.entity_of_row, &design.period_of_row, ne, np, time_fe);
    let mut x = design.x.clone();
    for j in 0..k {
        let mut col: Vec<f64> = x.column(j).iter().copied().collect();
        within(&mut col, &design.entity_of_row, &design.period_of_row, ne, np, time_fe);
        x.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    let absorbed = ne + if time_fe { np - 1 } else { 0 };
    if n <= k + absorbed {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k + absorbed });
    }
    let fit = ols_named(&y, &x, &design.columns, false)?;
    let dof = (n - k - absorbed) as f64;
    let s2 = fit.rss / dof;
    let standard_errors = match covariance {
        Covariance::Conventional => (0..k).map(|j| (s2 * fit.xtx_inv[(j, j)]).sqrt()).collect(),
        Covariance::ClusterEntity => cluster_se(&fit, &x, &design.entity_of_row, ne),
    };
    let tss: f64 = y.iter().map(|v| v * v).sum();
    let coefficients = fit.coefficients.clone();
    let z_stats: Vec<f64> = coefficients.iter().zip(&standard_errors).map(|(b, s)| b / s).collect();
    Ok(FeEcmReport {
        dependent: design.dependent_name.clone(),
        columns: design.columns.clone(),
        p_values: z_stats.iter().map(|&z| Tail::TwoSided.p_value(z)).collect(),
        coefficients,
        standard_errors,
        z_stats,
        entity_fe: true,
        time_fe,
        covariance,
        n_obs: n,
        n_entities: ne,
        r2_within: if tss > 0.0 { 1.0 - fit.rss / tss } else { f64::NAN },
    })
}

fn cluster_se(fit: &RegressionFit, x: &DMatrix<f64>, cluster: &[usize], n_clusters: usize) -> Vec<f64> {
    let k = x.ncols();
    let n = x.nrows() as f64;
    let mut meat = DMatrix::zeros(k, k);
    for g in 0..n_clusters {
        let mut score = nalgebra::DVector::zeros(k);
        for (r, &c) in cluster.iter().enumerate() {
            if c == g {
                score += x.row(r).transpose() * fit.residuals[r];
            }
        }
        meat += &score * score.transpose();
    }
    let gf = n_clusters as f64;
    let adj = gf / (gf - 1.0) * (n - 1.0) / (n - k as f64);
    let v = &fit.xtx_inv * meat * &fit.xtx_inv * adj;
    (0..k).map(|j| v[(j, j)].sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regress::ols;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn panel(n: usize, t: usize, seed: u64) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vars = ["FLOW", "HP", "INST", "INTEREST"];
        let series = vars
            .iter()
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let mut v = 0.0;
                        (0..t)
                            .map(|_| {
                                v += { let z: f64 = StandardNormal.sample(&mut rng); z };
                                v
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Panel::from_series(
            (0..n).map(|i| format!("C{i}")).collect(),
            Period::new(2009, 1).unwrap(),
            vars.iter().map(|s| s.to_string()).collect(),
            series,
        )
        .unwrap()
    }

    #[test]
    fn row_count_and_names() {
        let d = build_ecm_design(&panel(6, 41, 1), "INST", "FLOW").unwrap();
        assert_eq!(d.n_obs, 234);
        assert_eq!(
            d.columns,
            ["L.HP", "L.FLOW", "L.INST_FLOW", "L.INTEREST", "LD.HP", "LD.FLOW", "LD.INST_FLOW", "LD.INTEREST"]
        );
        assert_eq!(d.dependent_name, "D.HP");
        assert!(d.degenerate_columns.is_empty());
    }

    #[test]
    fn zero_inst_is_flagged_and_rank_deficient() {
        let p = panel(4, 30, 2);
        let p = p.replace_variable("INST", vec![vec![0.0; 30]; 4]).unwrap();
        let d = build_ecm_design(&p, "INST", "FLOW").unwrap();
        assert_eq!(d.degenerate_columns, ["L.INST_FLOW", "LD.INST_FLOW"]);
        assert!(matches!(fe_estimate(&d, false), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn constant_flow_has_zero_differences() {
        let p = panel(3, 20, 3);
        let flows: Vec<Vec<f64>> = (0..3).map(|e| vec![e as f64 + 1.0; 20]).collect();
        let d = build_ecm_design(&p.replace_variable("FLOW", flows).unwrap(), "INST", "FLOW").unwrap();
        assert!(d.x.column(5).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn within_matches_demeaned_ols_and_lsdv() {
        let d = build_ecm_design(&panel(5, 30, 4), "INST", "FLOW").unwrap();
        let fe = fe_estimate(&d, false).unwrap();
        let tw = fe_estimate(&d, true).unwrap();
        // LSDV with entity dummies (plus period dummies for the two-way case).
        for (report, time_fe) in [(&fe, false), (&tw, true)] {
            let extra = d.n_entities + if time_fe { d.n_periods - 1 } else { 0 };
            let k = d.columns.len();
            let z = DMatrix::from_fn(d.n_obs, k + extra, |r, c| {
                if c < k {
                    d.x[(r, c)]
                } else if c < k + d.n_entities {
                    (d.entity_of_row[r] == c - k) as u8 as f64
                } else {
                    (d.period_of_row[r] == c - k - d.n_entities + 1) as u8 as f64
                }
            });
            let lsdv = ols(&d.dependent, &z, false).unwrap();
            for j in 0..k {
                assert!((lsdv.coefficients[j] - report.coefficients[j]).abs() < 1e-9);
                assert!((lsdv.standard_errors[j] - report.standard_errors[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn level_shift_absorbed() {
        let p = panel(6, 41, 5);
        let base = fe_estimate(&build_ecm_design(&p, "INST", "FLOW").unwrap(), true).unwrap();
        let mut shifted = p.clone();
        for v in ["HP", "INTEREST"] {
            let s: Vec<Vec<f64>> = (0..6).map(|e| p.series(e, v).unwrap().iter().map(|x| x + 10.0).collect()).collect();
            shifted = shifted.replace_variable(v, s).unwrap();
        }
        let moved = fe_estimate(&build_ecm_design(&shifted, "INST", "FLOW").unwrap(), true).unwrap();
        for (a, b) in base.coefficients.iter().zip(&moved.coefficients) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cluster_errors_differ_but_coefficients_do_not() {
        let d = build_ecm_design(&panel(6, 41, 6), "INST", "FLOW").unwrap();
        let a = fe_estimate_with(&d, false, Covariance::Conventional).unwrap();
        let b = fe_estimate_with(&d, false, Covariance::ClusterEntity).unwrap();
        assert_eq!(a.coefficients, b.coefficients);
        assert!(b.standard_errors.iter().all(|s| s.is_finite() && *s > 0.0));
    }

    #[test]
    fn dropping_entity_removes_its_rows() {
        let p = panel(6, 41, 7);
        let full = build_ecm_design(&p, "INST", "FLOW").unwrap();
        let fewer = build_ecm_design(&p.select_entities(&[0, 1, 2, 4, 5]).unwrap(), "INST", "FLOW").unwrap();
        assert_eq!(full.n_obs - fewer.n_obs, 39);
    }
}
