//! Dumitrescu-Hurlin Granger non-causality test for heterogeneous panels.
//!
//! Each entity gets its own VAR-type regression of the effect on `K` own
//! lags and `K` lags of the cause; the individual Wald statistics for the
//! cause block are averaged into `W̄` and standardized two ways: `Z̄` with
//! the asymptotic χ²(K) moments and `Z̃` with the exact finite-T moments of
//! the individual statistic.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regress::ols;
use crate::stats::{mean, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldResult {
    pub statistic: f64,
    /// The cause series has no variation; the statistic is zero by
    /// convention.
    pub degenerate: bool,
    pub n_obs: usize,
}

/// Wald statistic for the joint nullity of the `k` cause lags in
/// `effect_t = c + Σ a_j effect_{t-j} + Σ b_j cause_{t-j} + e_t`.
pub fn individual_wald(effect: &[f64], cause: &[f64], k: usize) -> Result<WaldResult> {
    if k == 0 {
        return Err(Error::InvalidParameters("lag order must be at least 1".into()));
    }
    if effect.len() != cause.len() {
        return Err(Error::DimensionMismatch(format!(
            "effect has {} observations, cause {}",
            effect.len(),
            cause.len()
        )));
    }
    let t_len = effect.len();
    let needed = 3 * k + 5;
    if t_len <= needed {
        return Err(Error::SequenceTooShort { needed, got: t_len });
    }
    let rows = t_len - k;
    if cause.iter().all(|&c| c == cause[0]) {
        return Ok(WaldResult {
            statistic: 0.0,
            degenerate: true,
            n_obs: rows,
        });
    }
    let x = DMatrix::from_fn(rows, 2 * k, |r, c| {
        let t = r + k;
        if c < k {
            effect[t - 1 - c]
        } else {
            cause[t - 1 - (c - k)]
        }
    });
    let fit = ols(&effect[k..], &x, true)?;
    let idx: Vec<usize> = (1 + k..=2 * k).collect();
    Ok(WaldResult {
        statistic: fit.wald(&idx)?,
        degenerate: false,
        n_obs: rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhPValues {
    pub z_bar: f64,
    pub z_bar_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DhReport {
    pub cause: String,
    pub effect: String,
    pub lag_order: usize,
    pub wald_individual: Vec<f64>,
    pub w_bar: f64,
    pub z_bar: f64,
    pub z_bar_tilde: f64,
    pub p_values: DhPValues,
    pub n_panels: usize,
    pub t_used: usize,
    /// Entities whose cause series is constant.
    pub degenerate_entities: Vec<String>,
}

/// Exact mean and variance of an individual Wald statistic under the null
/// with `t_used` regression observations.
pub fn wald_null_moments(k: usize, t_used: usize) -> Result<(f64, f64)> {
    let t = t_used as f64;
    let kf = k as f64;
    if t <= 2.0 * kf + 5.0 {
        return Err(Error::SequenceTooShort {
            needed: 2 * k + 5,
            got: t_used,
        });
    }
    let a = t - 2.0 * kf - 1.0;
    let b = t - 2.0 * kf - 3.0;
    let mean = kf * a / b;
    let var = 2.0 * kf * a * a * (t - kf - 3.0) / (b * b * (t - 2.0 * kf - 5.0));
    Ok((mean, var))
}

/// Aggregate individual Wald statistics into `(W̄, Z̄, Z̃)`.
pub fn aggregate_walds(walds: &[f64], k: usize, t_used: usize) -> Result<(f64, f64, f64)> {
    if walds.is_empty() {
        return Err(Error::EmptySequence);
    }
    let n = walds.len() as f64;
    let kf = k as f64;
    let w_bar = mean(walds);
    let z_bar = (n / (2.0 * kf)).sqrt() * (w_bar - kf);
    let (mu, var) = wald_null_moments(k, t_used)?;
    let z_bar_tilde = n.sqrt() * (w_bar - mu) / var.sqrt();
    Ok((w_bar, z_bar, z_bar_tilde))
}

/// Dumitrescu-Hurlin test of `cause` not Granger-causing `effect` in any
/// entity, with a common lag order `k`.
pub fn dh_test(panel: &Panel, cause: &str, effect: &str, k: usize) -> Result<DhReport> {
    let c = panel.variable_index(cause)?;
    let e = panel.variable_index(effect)?;
    let results: Vec<WaldResult> = (0..panel.n_entities())
        .into_par_iter()
        .map(|i| {
            individual_wald(panel.series_at(i, e), panel.series_at(i, c), k)
                .map_err(|err| err.in_entity(&panel.entities()[i]))
        })
        .collect::<Result<_>>()?;
    let t_used = results[0].n_obs;
    let wald_individual: Vec<f64> = results.iter().map(|r| r.statistic).collect();
    let (w_bar, z_bar, z_bar_tilde) = aggregate_walds(&wald_individual, k, t_used)?;
    let degenerate_entities = results
        .iter()
        .zip(panel.entities())
        .filter(|(r, _)| r.degenerate)
        .map(|(_, name)| name.clone())
        .collect();
    Ok(DhReport {
        cause: cause.to_string(),
        effect: effect.to_string(),
        lag_order: k,
        w_bar,
        z_bar,
        z_bar_tilde,
        p_values: DhPValues {
            z_bar: Tail::TwoSided.p_value(z_bar),
            z_bar_tilde: Tail::TwoSided.p_value(z_bar_tilde),
        },
        n_panels: panel.n_entities(),
        t_used,
        wald_individual,
        degenerate_entities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Period;
    use crate::stats::chi2_quantile;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn ar1_panel(n: usize, t: usize, seed: u64) -> Panel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let block = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| {
                    let mut v = 0.0;
                    normals(t, rng).into_iter().map(|e| {
                        v = 0.5 * v + e;
                        v
                    }).collect()
                })
                .collect()
        };
        let a = block(&mut rng);
        let b = block(&mut rng);
        Panel::from_series(
            (0..n).map(|i| format!("E{i}")).collect(),
            Period::new(2009, 1).unwrap(),
            vec!["cause".into(), "effect".into()],
            vec![a, b],
        )
        .unwrap()
    }

    #[test]
    fn null_wald_mostly_below_chi2_quantile() {
        let q = chi2_quantile(0.95, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let below = (0..1000)
            .filter(|_| {
                let a = normals(200, &mut rng);
                let b = normals(200, &mut rng);
                individual_wald(&a, &b, 2).unwrap().statistic < q
            })
            .count();
        assert!((920..=980).contains(&below), "{below}");
    }

    #[test]
    fn causal_wald_rejects() {
        let q = chi2_quantile(0.99, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hits = (0..500)
            .filter(|_| {
                let cause = normals(200, &mut rng);
                let noise = normals(200, &mut rng);
                let effect: Vec<f64> = (0..200)
                    .map(|t| if t == 0 { noise[0] } else { 0.8 * cause[t - 1] + noise[t] })
                    .collect();
                individual_wald(&effect, &cause, 1).unwrap().statistic > q
            })
            .count();
        assert!(hits >= 495, "{hits}");
    }

    #[test]
    fn zero_cause_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let effect = normals(50, &mut rng);
        let r = individual_wald(&effect, &[0.0; 50], 2).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.degenerate);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            individual_wald(&[0.0; 10], &[1.0; 10], 2),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn centering_identity() {
        let (_, z_bar, _) = aggregate_walds(&[2.0; 6], 2, 39).unwrap();
        assert_eq!(z_bar, 0.0);
    }

    #[test]
    fn finite_t_moments_approach_chi2() {
        let (m, v) = wald_null_moments(2, 100_000).unwrap();
        assert!((m - 2.0).abs() < 1e-3);
        assert!((v - 4.0).abs() < 1e-3);
    }

    #[test]
    fn report_on_paper_shaped_panel() {
        let p = ar1_panel(6, 41, 4);
        let r = dh_test(&p, "cause", "effect", 2).unwrap();
        assert_eq!(r.t_used, 39);
        assert_eq!(r.n_panels, 6);
        assert_eq!(r.w_bar, mean(&r.wald_individual));
        assert!(r.wald_individual.iter().all(|&w| w >= 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn affine_invariance(seed in any::<u64>(), a in 0.1f64..10.0, b in -50.0f64..50.0, c in -10.0f64..-0.1, d in -5.0f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = normals(60, &mut rng);
            let y = normals(60, &mut rng);
            let w0 = individual_wald(&y, &x, 2).unwrap().statistic;
            let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ys: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let w1 = individual_wald(&ys, &xs, 2).unwrap().statistic;
            prop_assert!((w0 - w1).abs() < 1e-8 * w0.max(1.0));
        }

        #[test]
        fn monotone_aggregation(walds in proptest::collection::vec(0.0f64..20.0, 1..12), bump in 1e-6f64..5.0, which in any::<prop::sample::Index>()) {
            let (w0, z0, zt0) = aggregate_walds(&walds, 2, 39).unwrap();
            let mut up = walds.clone();
            let i = which.index(up.len());
            up[i] += bump;
            let (w1, z1, zt1) = aggregate_walds(&up, 2, 39).unwrap();
            prop_assert!(w1 > w0 && z1 > z0 && zt1 > zt0);
        }
    }
}
