//! Pooled mean group estimation of a panel error-correction model.
//!
//! For entity `i` the model is
//!
//! ```text
//! Δy_t = φ_i (y_{t-1} − θ'x_{t-1}) + Σ_{j=1}^{p-1} λ_ij Δy_{t-j}
//!        + Σ_k Σ_{l=0}^{q_k-1} δ_ikl Δx_{k,t-l} + c_i + e_it,
//! ```
//!
//! with `θ` common to all entities. Given `θ`, every entity's `φ_i`, short-run
//! coefficients and error variance have closed forms, so the Gaussian
//! log-likelihood is concentrated onto `θ` and maximized by Newton steps with
//! step-halving.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regress::{ols, ols_named, RANK_TOLERANCE};
use crate::stats::{mean, std_dev, Tail};

pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArdlOrder {
    /// Lags of the dependent variable in levels form; the ECM carries `p − 1`
    /// lagged differences.
    pub p: usize,
    /// Per regressor, the number of differenced terms (lags `0 .. q−1`).
    pub q: Vec<usize>,
}

impl ArdlOrder {
    pub fn uniform(p: usize, q: usize, regressors: usize) -> Self {
        Self { p, q: vec![q; regressors] }
    }

    /// One lagged `Δy` and, for a regressor called `FLOW`, four differenced
    /// terms; one contemporaneous difference for everything else.
    pub fn default_for(regressors: &[String]) -> Self {
        Self {
            p: 2,
            q: regressors.iter().map(|r| if r == "FLOW" { 4 } else { 1 }).collect(),
        }
    }

    fn first_row(&self) -> usize {
        self.q.iter().copied().chain([self.p, 1]).max().unwrap_or(1)
    }

    fn short_run_names(&self, dependent: &str, regressors: &[String]) -> Vec<String> {
        let mut names = Vec::new();
        for j in 1..self.p {
            names.push(format!("D({dependent}(-{j}))"));
        }
        for (k, r) in regressors.iter().enumerate() {
            for l in 0..self.q[k] {
                names.push(if l == 0 { format!("D({r})") } else { format!("D({r}(-{l}))") });
            }
        }
        names
    }
}

/// One entity's data after lag construction, with the short-run block
/// projected out.
#[derive(Debug, Clone)]
struct EntityEcm {
    dy: DVector<f64>,
    ylag: DVector<f64>,
    xlag: DMatrix<f64>,
    short_run: DMatrix<f64>,
    a: DVector<f64>,
    b_y: DVector<f64>,
    b_x: DMatrix<f64>,
}

impl EntityEcm {
    fn build(y: &[f64], x: &DMatrix<f64>, order: &ArdlOrder) -> Result<Self> {
        let t_len = y.len();
        let m = x.ncols();
        let s = order.first_row();
        let n = t_len.saturating_sub(s);
        let k_short: usize = order.p - 1 + order.q.iter().sum::<usize>();
        let needed = 5 + 1 + m + 1 + k_short;
        if n < needed {
            return Err(Error::TooFewPeriods { needed: needed + s, got: t_len });
        }
        let dy = DVector::from_fn(n, |r, _| y[s + r] - y[s + r - 1]);
        let ylag = DVector::from_fn(n, |r, _| y[s + r - 1]);
        let xlag = DMatrix::from_fn(n, m, |r, k| x[(s + r - 1, k)]);
        let mut short_run = DMatrix::zeros(n, k_short);
        for r in 0..n {
            let t = s + r;
            let mut c = 0;
            for j in 1..order.p {
                short_run[(r, c)] = y[t - j] - y[t - j - 1];
                c += 1;
            }
            for k in 0..m {
                for l in 0..order.q[k] {
                    short_run[(r, c)] = x[(t - l, k)] - x[(t - l - 1, k)];
                    c += 1;
                }
            }
        }
        let mut w = short_run.clone().insert_column(0, 1.0);
        for r in 0..n {
            w[(r, 0)] = 1.0;
        }
        let annihilate = |v: &[f64]| -> Result<DVector<f64>> { Ok(DVector::from_vec(ols(v, &w, false)?.residuals)) };
        let a = annihilate(dy.as_slice())?;
        let b_y = annihilate(ylag.as_slice())?;
        let mut b_x = DMatrix::zeros(n, m);
        for k in 0..m {
            let col: Vec<f64> = xlag.column(k).iter().copied().collect();
            b_x.set_column(k, &annihilate(&col)?);
        }
        Ok(Self { dy, ylag, xlag, short_run, a, b_y, b_x })
    }

    fn n(&self) -> usize {
        self.dy.len()
    }

    /// `(φ, σ², residuals, loglik)` at `θ`.
    fn profile(&self, theta: &DVector<f64>) -> (f64, f64, DVector<f64>, f64) {
        let xi = &self.b_y - &self.b_x * theta;
        let xx = xi.dot(&xi);
        let phi = if xx > 0.0 { self.a.dot(&xi) / xx } else { 0.0 };
        let e = &self.a - &xi * phi;
        let n = self.n() as f64;
        let sigma2 = e.dot(&e) / n;
        let ll = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + sigma2.ln() + 1.0);
        (phi, sigma2, e, ll)
    }
}

fn prepare(panel: &Panel, dependent: &str, regressors: &[String], order: &ArdlOrder) -> Result<Vec<EntityEcm>> {
    if regressors.is_empty() {
        return Err(Error::InvalidParameters("at least one long-run regressor required".into()));
    }
    if order.p == 0 {
        return Err(Error::InvalidParameters("ARDL order p must be at least 1".into()));
    }
    if order.q.len() != regressors.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} regressors but {} lag orders",
            regressors.len(),
            order.q.len()
        )));
    }
    let yi = panel.variable_index(dependent)?;
    let xi: Vec<usize> = regressors.iter().map(|r| panel.variable_index(r)).collect::<Result<_>>()?;
    (0..panel.n_entities())
        .into_par_iter()
        .map(|e| {
            let y = panel.series_at(e, yi);
            let x = DMatrix::from_fn(y.len(), xi.len(), |t, k| panel.series_at(e, xi[k])[t]);
            EntityEcm::build(y, &x, order).map_err(|err| err.in_entity(&panel.entities()[e]))
        })
        .collect()
}

fn total_loglik(data: &[EntityEcm], theta: &DVector<f64>) -> f64 {
    data.iter().map(|d| d.profile(theta).3).sum()
}

/// Analytic gradient and the outer information matrix `Σ (φ²/σ²) B'B`.
fn gradient_information(data: &[EntityEcm], theta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let m = theta.len();
    let mut g = DVector::zeros(m);
    let mut info = DMatrix::zeros(m, m);
    for d in data {
        let (phi, sigma2, e, _) = d.profile(theta);
        g -= d.b_x.transpose() * &e * (phi / sigma2);
        info += d.b_x.transpose() * &d.b_x * (phi * phi / sigma2);
    }
    (g, info)
}

/// Concentrated log-likelihood at `theta`.
pub fn pmg_loglik(
    theta: &[f64],
    panel: &Panel,
    dependent: &str,
    regressors: &[String],
    order: &ArdlOrder,
) -> Result<f64> {
    let data = prepare(panel, dependent, regressors, order)?;
    check_theta(theta, regressors)?;
    Ok(total_loglik(&data, &DVector::from_column_slice(theta)))
}

/// Analytic gradient of [`pmg_loglik`] with respect to `theta`.
pub fn pmg_gradient(
    theta: &[f64],
    panel: &Panel,
    dependent: &str,
    regressors: &[String],
    order: &ArdlOrder,
) -> Result<Vec<f64>> {
    let data = prepare(panel, dependent, regressors, order)?;
    check_theta(theta, regressors)?;
    let (g, _) = gradient_information(&data, &DVector::from_column_slice(theta));
    Ok(g.iter().copied().collect())
}

fn check_theta(theta: &[f64], regressors: &[String]) -> Result<()> {
    if theta.len() != regressors.len() {
        return Err(Error::DimensionMismatch(format!(
            "theta has {} entries for {} regressors",
            theta.len(),
            regressors.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortRunFit {
    pub entity: String,
    pub phi: f64,
    pub phi_se: f64,
    pub phi_z: f64,
    pub phi_p: f64,
    /// Short-run names in order, then `"const"` last.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub sigma2: f64,
    pub n_obs: usize,
}

/// Cross-entity average of a per-entity coefficient with standard error
/// `sd/√N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledTerm {
    pub name: String,
    pub estimate: f64,
    pub standard_error: f64,
    pub z_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmgFit {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub order: ArdlOrder,
    pub theta: Vec<f64>,
    pub theta_se: Vec<f64>,
    pub theta_z: Vec<f64>,
    pub theta_p: Vec<f64>,
    pub phi: Vec<f64>,
    pub short_run: Vec<ShortRunFit>,
    /// Mean-group averages of `φ_i` (named `COINTEQ01`) and of each
    /// short-run coefficient.
    pub pooled: Vec<PooledTerm>,
    pub loglik: f64,
    pub loglik_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Entities with `φ_i ≥ 0`, where no error correction takes place.
    pub degenerate_entities: Vec<String>,
    pub warnings: Vec<String>,
    pub n_obs_per_entity: usize,
}

impl PmgFit {
    pub fn pooled_phi(&self) -> &PooledTerm {
        &self.pooled[0]
    }
}

fn within_start(data: &[EntityEcm], m: usize) -> Result<DVector<f64>> {
    let rows: usize = data.iter().map(|d| d.n()).sum();
    let mut y = Vec::with_capacity(rows);
    let mut x = DMatrix::zeros(rows, m);
    let mut r0 = 0;
    for d in data {
        let n = d.n();
        let ym = d.ylag.mean();
        y.extend(d.ylag.iter().map(|v| v - ym));
        for k in 0..m {
            let xm = d.xlag.column(k).mean();
            for r in 0..n {
                x[(r0 + r, k)] = d.xlag[(r, k)] - xm;
            }
        }
        r0 += n;
    }
    Ok(DVector::from_vec(ols(&y, &x, false)?.coefficients))
}

fn invert(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.iter().any(|&s| s <= RANK_TOLERANCE * smax) {
        return None;
    }
    m.clone().try_inverse()
}

/// Fit the pooled mean group estimator.
pub fn pmg_fit(panel: &Panel, dependent: &str, regressors: &[String], order: &ArdlOrder) -> Result<PmgFit> {
    let data = prepare(panel, dependent, regressors, order)?;
    let theta0 = within_start(&data, regressors.len())?;
    pmg_from_start(panel, &data, dependent, regressors, order, theta0)
}

/// As [`pmg_fit`] from a caller-supplied starting value.
pub fn pmg_fit_from(
    panel: &Panel,
    dependent: &str,
    regressors: &[String],
    order: &ArdlOrder,
    start: &[f64],
) -> Result<PmgFit> {
    check_theta(start, regressors)?;
    let data = prepare(panel, dependent, regressors, order)?;
    pmg_from_start(panel, &data, dependent, regressors, order, DVector::from_column_slice(start))
}

fn pmg_from_start(
    panel: &Panel,
    data: &[EntityEcm],
    dependent: &str,
    regressors: &[String],
    order: &ArdlOrder,
    mut theta: DVector<f64>,
) -> Result<PmgFit> {
    let mut ll = total_loglik(data, &theta);
    if !ll.is_finite() {
        return Err(Error::InvalidParameters("log-likelihood not finite at the starting value".into()));
    }
    let mut history = vec![ll];
    let mut iterations = 0;
    let mut step_converged = false;
    while iterations < MAX_ITERATIONS {
        let (g, info) = gradient_information(data, &theta);
        let Some(inv) = invert(&info) else { break };
        let step = inv * g;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = &theta + &step * scale;
            let ll_c = total_loglik(data, &cand);
            if ll_c >= ll {
                accepted = Some((cand, ll_c));
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        let Some((cand, ll_c)) = accepted else {
            step_converged = step.amax() * scale < STEP_TOLERANCE;
            break;
        };
        let moved = (&cand - &theta).amax();
        theta = cand;
        ll = ll_c;
        history.push(ll);
        if moved < STEP_TOLERANCE {
            step_converged = true;
            break;
        }
    }

    let (g, info) = gradient_information(data, &theta);
    let gradient_norm = g.norm();
    let decrement = invert(&info).map(|inv| (g.transpose() * inv * &g)[(0, 0)]).unwrap_or(f64::INFINITY);
    let converged = step_converged && decrement.sqrt() < 1e-6;

    let m = regressors.len();
    let hessian = numerical_hessian(data, &theta);
    let cov = invert(&(-&hessian))
        .filter(|c| (0..m).all(|j| c[(j, j)] > 0.0))
        .or_else(|| invert(&info))
        .unwrap_or_else(|| DMatrix::from_element(m, m, f64::NAN));
    let theta_se: Vec<f64> = (0..m).map(|j| cov[(j, j)].sqrt()).collect();
    let theta_v: Vec<f64> = theta.iter().copied().collect();
    let theta_z: Vec<f64> = theta_v.iter().zip(&theta_se).map(|(b, s)| b / s).collect();
    let theta_p = theta_z.iter().map(|&z| Tail::TwoSided.p_value(z)).collect();

    let names = order.short_run_names(dependent, regressors);
    let short_run: Vec<ShortRunFit> = data
        .par_iter()
        .zip(panel.entities().par_iter())
        .map(|(d, entity)| short_run_fit(d, &theta, &names, entity))
        .collect::<Result<_>>()?;
    let phi: Vec<f64> = short_run.iter().map(|s| s.phi).collect();

    let mut pooled = vec![pooled_term("COINTEQ01", &phi)];
    for (j, name) in short_run[0].names.iter().enumerate() {
        let col: Vec<f64> = short_run.iter().map(|s| s.coefficients[j]).collect();
        pooled.push(pooled_term(name, &col));
    }

    let mut warnings = Vec::new();
    let mut degenerate_entities = Vec::new();
    for s in &short_run {
        if s.phi >= 0.0 {
            degenerate_entities.push(s.entity.clone());
        }
        if !(s.phi > -2.0 && s.phi <= 0.0) {
            warnings.push(format!("NonStationaryAdjustment: {} has phi = {:.4}", s.entity, s.phi));
        }
    }
    if !converged {
        warnings.push(format!("NotConverged after {iterations} iterations"));
    }
    Ok(PmgFit {
        dependent: dependent.to_string(),
        regressors: regressors.to_vec(),
        order: order.clone(),
        theta: theta_v,
        theta_se,
        theta_z,
        theta_p,
        phi,
        short_run,
        pooled,
        loglik: ll,
        loglik_history: history,
        iterations,
        converged,
        gradient_norm,
        degenerate_entities,
        warnings,
        n_obs_per_entity: data[0].n(),
    })
}

fn pooled_term(name: &str, values: &[f64]) -> PooledTerm {
    let estimate = mean(values);
    let standard_error = if values.len() > 1 {
        std_dev(values) / (values.len() as f64).sqrt()
    } else {
        f64::NAN
    };
    let z_stat = estimate / standard_error;
    PooledTerm {
        name: name.to_string(),
        estimate,
        standard_error,
        z_stat,
        p_value: Tail::TwoSided.p_value(z_stat),
    }
}

fn numerical_hessian(data: &[EntityEcm], theta: &DVector<f64>) -> DMatrix<f64> {
    let m = theta.len();
    let mut h = DMatrix::zeros(m, m);
    for j in 0..m {
        let step = 1e-5 * theta[j].abs().max(1.0);
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[j] += step;
        dn[j] -= step;
        let diff = (gradient_information(data, &up).0 - gradient_information(data, &dn).0) / (2.0 * step);
        h.set_column(j, &diff);
    }
    (&h + h.transpose()) * 0.5
}

fn short_run_fit(d: &EntityEcm, theta: &DVector<f64>, names: &[String], entity: &str) -> Result<ShortRunFit> {
    let n = d.n();
    let k = d.short_run.ncols();
    let xi = &d.ylag - &d.xlag * theta;
    let design = DMatrix::from_fn(n, 1 + k, |r, c| if c == 0 { xi[r] } else { d.short_run[(r, c - 1)] });
    let mut cols = vec!["ec".to_string()];
    cols.extend(names.iter().cloned());
    let fit = ols_named(d.dy.as_slice(), &design, &cols, true)?;
    let sigma2 = fit.rss / n as f64;
    let scale = (fit.rss / n as f64 / fit.s2()).sqrt();
    let se: Vec<f64> = fit.standard_errors.iter().map(|s| s * scale).collect();
    // ols_named puts "const" first, then "ec", then the short-run block.
    let pick = |j: usize| (fit.coefficients[j], se[j]);
    let (phi, phi_se) = pick(1);
    let mut out_names = names.to_vec();
    out_names.push("const".into());
    let mut coefficients = Vec::with_capacity(k + 1);
    let mut standard_errors = Vec::with_capacity(k + 1);
    for j in 0..k {
        let (b, s) = pick(2 + j);
        coefficients.push(b);
        standard_errors.push(s);
    }
    let (c, cs) = pick(0);
    coefficients.push(c);
    standard_errors.push(cs);
    let z_stats: Vec<f64> = coefficients.iter().zip(&standard_errors).map(|(b, s)| b / s).collect();
    let p_values = z_stats.iter().map(|&z| Tail::TwoSided.p_value(z)).collect();
    Ok(ShortRunFit {
        entity: entity.to_string(),
        phi,
        phi_se,
        phi_z: phi / phi_se,
        phi_p: Tail::TwoSided.p_value(phi / phi_se),
        names: out_names,
        coefficients,
        standard_errors,
        z_stats,
        p_values,
        sigma2,
        n_obs: n,
    })
}

/// Levels-form ARDL coefficients implied by one entity's fitted ECM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArdlLevels {
    /// Coefficients on `y_{t-1} .. y_{t-p}`.
    pub ar: Vec<f64>,
    /// Per regressor, coefficients on `x_t .. x_{t-max(q,1)}`.
    pub distributed_lags: Vec<Vec<f64>>,
    pub intercept: f64,
}

impl ArdlLevels {
    /// `Σ_l b_kl / (1 − Σ_j a_j)` for every regressor.
    pub fn long_run(&self) -> Vec<f64> {
        let denom = 1.0 - self.ar.iter().sum::<f64>();
        self.distributed_lags.iter().map(|b| b.iter().sum::<f64>() / denom).collect()
    }
}

/// Expand entity `index` of a fit back to the ARDL levels representation.
pub fn ardl_levels(fit: &PmgFit, index: usize) -> ArdlLevels {
    let sr = &fit.short_run[index];
    let p = fit.order.p;
    let phi = sr.phi;
    let lambda = &sr.coefficients[..p - 1];
    let mut ar = vec![0.0; p];
    ar[0] = 1.0 + phi;
    for j in 0..p - 1 {
        ar[j] += lambda[j];
        ar[j + 1] -= lambda[j];
    }
    let mut offset = p - 1;
    let mut distributed_lags = Vec::with_capacity(fit.regressors.len());
    for (k, &q) in fit.order.q.iter().enumerate() {
        let delta = &sr.coefficients[offset..offset + q];
        offset += q;
        let mut b = vec![0.0; q.max(1) + 1];
        for (l, &d) in delta.iter().enumerate() {
            b[l] += d;
            b[l + 1] -= d;
        }
        b[1] -= phi * fit.theta[k];
        distributed_lags.push(b);
    }
    ArdlLevels {
        ar,
        distributed_lags,
        intercept: *sr.coefficients.last().unwrap_or(&0.0),
    }
}
