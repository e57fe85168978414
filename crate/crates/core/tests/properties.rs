use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use xtpanel::causality::dh_test;
use xtpanel::coint::CointSpec;
use xtpanel::fmols::{fmols_panel, FmolsMode};
use xtpanel::pmg::{pmg_fit, ArdlOrder};
use xtpanel::regress::ols;
use xtpanel::{Panel, Period};

fn z(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = StandardNormal.sample(rng);
    v
}

fn start() -> Period {
    Period::new(2009, 1).unwrap()
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("E{i}")).collect()
}

fn walk(rng: &mut ChaCha8Rng, t: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..t)
        .map(|_| {
            acc += z(rng);
            acc
        })
        .collect()
}

/// `y = 1 + β'x + u` with `m` random-walk regressors.
fn cointegrated(seed: u64, n: usize, t: usize, m: usize) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = vec![Vec::new(); m];
    let mut ys = Vec::new();
    for _ in 0..n {
        let cols: Vec<Vec<f64>> = (0..m).map(|_| walk(&mut rng, t)).collect();
        let y = (0..t)
            .map(|s| 1.0 + cols.iter().enumerate().map(|(k, c)| (k as f64 + 1.0) * c[s]).sum::<f64>() + z(&mut rng))
            .collect();
        ys.push(y);
        for (k, c) in cols.into_iter().enumerate() {
            xs[k].push(c);
        }
    }
    let mut vars = vec!["y".to_string()];
    vars.extend((1..=m).map(|k| format!("x{k}")));
    let mut series = vec![ys];
    series.extend(xs);
    Panel::from_series(names(n), start(), vars, series).unwrap()
}

fn normal_equations(y: &[f64], x: &DMatrix<f64>) -> Vec<f64> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * nalgebra::DVector::from_column_slice(y);
    (xtx.try_inverse().unwrap() * xty).iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ols_matches_normal_equations(seed in any::<u64>(), k in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(50, k, |_, _| z(&mut rng));
        let y: Vec<f64> = (0..50).map(|_| z(&mut rng)).collect();
        let fit = ols(&y, &x, false).unwrap();
        for (a, b) in fit.coefficients.iter().zip(normal_equations(&y, &x)) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let e = nalgebra::DVector::from_vec(fit.residuals.clone());
        prop_assert!((x.transpose() * e).amax() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn w_bar_is_mean_of_individual_walds(seed in any::<u64>(), n in 2usize..8, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = 30;
        let y: Vec<Vec<f64>> = (0..n).map(|_| (0..t).map(|_| z(&mut rng)).collect()).collect();
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..t).map(|_| z(&mut rng)).collect()).collect();
        let p = Panel::from_series(names(n), start(), vec!["x".into(), "y".into()], vec![x, y]).unwrap();
        let r = dh_test(&p, "x", "y", k).unwrap();
        let mean = r.wald_individual.iter().sum::<f64>() / n as f64;
        prop_assert!((r.w_bar - mean).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grouped_fmols_is_mean_of_entity_estimates(seed in any::<u64>(), n in 1usize..6, m in 1usize..3) {
        let p = cointegrated(seed, n, 60, m);
        let regs: Vec<String> = (1..=m).map(|k| format!("x{k}")).collect();
        let refs: Vec<&str> = regs.iter().map(String::as_str).collect();
        let r = fmols_panel(&p, &CointSpec::kao("y", &refs), FmolsMode::Grouped).unwrap();
        for j in 0..m {
            let mean = r.per_entity.iter().map(|e| e.coefficients[j]).sum::<f64>() / n as f64;
            prop_assert!((r.coefficients[j] - mean).abs() < 1e-12);
        }
    }
}

fn fmols_both(p: &Panel, regs: &[&str]) -> [xtpanel::fmols::FmolsReport; 2] {
    let spec = CointSpec::kao("y", regs);
    [
        fmols_panel(p, &spec, FmolsMode::Pooled).unwrap(),
        fmols_panel(p, &spec, FmolsMode::Grouped).unwrap(),
    ]
}

#[test]
fn fmols_regressor_permutation_equivariance() {
    let p = cointegrated(5, 4, 80, 2);
    let a = fmols_both(&p, &["x1", "x2"]);
    let b = fmols_both(&p, &["x2", "x1"]);
    for (ra, rb) in a.iter().zip(&b) {
        assert!((ra.coefficients[0] - rb.coefficients[1]).abs() < 1e-10);
        assert!((ra.coefficients[1] - rb.coefficients[0]).abs() < 1e-10);
        assert!((ra.t_stats[0] - rb.t_stats[1]).abs() < 1e-8);
    }
}

#[test]
fn fmols_units_rescale_coefficient_only() {
    let p = cointegrated(6, 4, 80, 2);
    let c = 100.0;
    let scaled: Vec<Vec<f64>> = (0..p.n_entities()).map(|e| p.series(e, "x1").unwrap().iter().map(|v| v * c).collect()).collect();
    let q = p.replace_variable("x1", scaled).unwrap();
    let a = fmols_both(&p, &["x1", "x2"]);
    let b = fmols_both(&q, &["x1", "x2"]);
    for (ra, rb) in a.iter().zip(&b) {
        assert!((ra.coefficients[0] / c - rb.coefficients[0]).abs() < 1e-10 * ra.coefficients[0].abs().max(1.0));
        assert!((ra.coefficients[1] - rb.coefficients[1]).abs() < 1e-9);
        assert!((ra.t_stats[0] - rb.t_stats[0]).abs() < 1e-8);
        assert!((ra.t_stats[1] - rb.t_stats[1]).abs() < 1e-8);
    }
}

/// `Δy = c_i + φ_i (y_{t-1} − θ x_{t-1}) + ε`, x a random walk.
fn ecm_panel(seed: u64, n: usize, t: usize, theta: f64) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    for i in 0..n {
        let phi = -0.1 - 0.1 * (i % 6) as f64;
        let x = walk(&mut rng, t);
        let mut y = vec![theta * x[0]];
        for s in 1..t {
            let prev = y[s - 1];
            y.push(prev + 0.2 + phi * (prev - theta * x[s - 1]) + z(&mut rng));
        }
        ys.push(y);
        xs.push(x);
    }
    Panel::from_series(names(n), start(), vec!["x1".into(), "y".into()], vec![xs, ys]).unwrap()
}

#[test]
fn pmg_likelihood_never_decreases() {
    for seed in 0..50 {
        let p = ecm_panel(seed, 4, 60, 0.5);
        let fit = pmg_fit(&p, "y", &["x1".into()], &ArdlOrder::uniform(1, 1, 1)).unwrap();
        for w in fit.loglik_history.windows(2) {
            assert!(w[1] >= w[0], "seed {seed}: {} then {}", w[0], w[1]);
        }
    }
}
