//! Synthetic panel generators.
//!
//! All innovations are standard normal draws from a ChaCha8 stream keyed by
//! the DGP seed; replication `r` of a Monte Carlo run uses stream `r + 1`
//! of the same key, so draws never depend on execution order.
//!
//! Families and their equations (entity `i`, period `t`, `ε` standard
//! normal):
//!
//! * `independent-random-walks`: `y_t = y_{t-1} + d_y + ε`, and the same for
//!   every regressor `x_k` with its own drift `d_x`.
//! * `cointegrated-homogeneous`: `x_k` random walks,
//!   `y_t = α_i + β'x_t + u_t`, `u_t = ρ u_{t-1} + σ ε_t`, `α_i ~ N(0, 1)`.
//! * `cointegrated-heterogeneous`: as above with
//!   `β_ik = β_k + τ η_ik`, `η ~ N(0, 1)` fixed per entity.
//! * `ecm-pmg`: `x_k` random walks,
//!   `Δy_t = c_i + φ_i (y_{t-1} − θ'x_{t-1}) + σ ε_t`.
//! * `causal-var`: `x_t = a_x x_{t-1} + ε`,
//!   `y_t = a_y y_{t-1} + b x_{t-1} + ε`; variables `y` (effect) and `x1`
//!   (cause).
//! * `paper-shaped`: a seven-variable house-price panel
//!   (`HP`, `FLOW`, `INST`, `INTEREST`, `INCOME`, `EXRATE`, `STOCKPRICE`)
//!   with
//!   `ΔHP_t = a_i + φ HP_{t-1} + β_f FLOW_{t-1} + β_if INST_{t-1} FLOW_{t-1}
//!   + β_r INTEREST_{t-1} + γ ΔHP_{t-1} + σ ε_t`; `FLOW` and `INTEREST`
//!   persistent AR(1) around entity means, `INST` an annual step series, the
//!   remaining three random walks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use xtpanel::{Error, Panel, Period, Result};

use crate::ingest::{write_annual_csv, write_panel_columns, write_panel_csv};

fn one() -> f64 {
    1.0
}

fn default_regressors() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Dgp {
    IndependentRandomWalks {
        #[serde(default = "default_regressors")]
        regressors: usize,
        #[serde(default)]
        drift_y: f64,
        #[serde(default)]
        drift_x: f64,
    },
    CointegratedHomogeneous {
        beta: Vec<f64>,
        #[serde(default = "one")]
        noise_sd: f64,
        #[serde(default)]
        error_ar: f64,
    },
    CointegratedHeterogeneous {
        beta: Vec<f64>,
        beta_sd: f64,
        #[serde(default = "one")]
        noise_sd: f64,
        #[serde(default)]
        error_ar: f64,
    },
    EcmPmg {
        theta: Vec<f64>,
        /// Adjustment speeds, recycled across entities.
        phi: Vec<f64>,
        #[serde(default = "one")]
        noise_sd: f64,
    },
    CausalVar {
        causal: f64,
        #[serde(default)]
        ar_y: f64,
        #[serde(default)]
        ar_x: f64,
    },
    PaperShaped(PaperShaped),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PaperShaped {
    pub adjustment: f64,
    pub flow_effect: f64,
    pub interaction_effect: f64,
    pub interest_effect: f64,
    pub momentum: f64,
    pub noise_sd: f64,
}

impl Default for PaperShaped {
    fn default() -> Self {
        Self {
            adjustment: -0.2,
            flow_effect: 0.05,
            interaction_effect: -0.0005,
            interest_effect: -0.01,
            momentum: 0.2,
            noise_sd: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    #[serde(flatten)]
    pub dgp: Dgp,
    pub n: usize,
    pub t: usize,
    pub seed: u64,
}

/// Seed of the bundled fixture.
pub const FIXTURE_SEED: u64 = 2009;

/// First quarter of every generated panel.
pub fn start() -> Period {
    Period::new(2009, 1).expect("valid quarter")
}

impl DgpSpec {
    pub fn new(dgp: Dgp, n: usize, t: usize, seed: u64) -> Self {
        Self { dgp, n, t, seed }
    }

    /// The paper-shaped fixture layout: 6 entities, 41 quarters.
    pub fn paper_fixture(seed: u64) -> Self {
        Self::new(Dgp::PaperShaped(PaperShaped::default()), 6, 41, seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameters(m.to_string()));
        if self.n < 1 {
            return bad("N must be at least 1");
        }
        if self.t < 20 {
            return bad("T must be at least 20");
        }
        match &self.dgp {
            Dgp::IndependentRandomWalks { regressors, .. } if *regressors == 0 => bad("at least one regressor"),
            Dgp::CointegratedHomogeneous { beta, noise_sd, error_ar } | Dgp::CointegratedHeterogeneous { beta, noise_sd, error_ar, .. } => {
                if beta.is_empty() {
                    bad("beta must have at least one entry")
                } else if !(*noise_sd > 0.0) {
                    bad("noise_sd must be positive")
                } else if !(error_ar.abs() < 1.0) {
                    bad("error_ar must lie in (-1, 1) for a stationary equilibrium error")
                } else {
                    Ok(())
                }
            }
            Dgp::EcmPmg { theta, phi, noise_sd } => {
                if theta.is_empty() || phi.is_empty() {
                    bad("theta and phi must be non-empty")
                } else if phi.iter().any(|&p| !(p > -2.0 && p < 0.0)) {
                    bad("every phi must lie in (-2, 0)")
                } else if !(*noise_sd > 0.0) {
                    bad("noise_sd must be positive")
                } else {
                    Ok(())
                }
            }
            Dgp::CausalVar { ar_y, ar_x, .. } if !(ar_y.abs() < 1.0 && ar_x.abs() < 1.0) => {
                bad("VAR autoregressive coefficients must lie in (-1, 1)")
            }
            Dgp::PaperShaped(p) if !(p.adjustment > -2.0 && p.adjustment < 0.0) || !(p.noise_sd > 0.0) => {
                bad("adjustment must lie in (-2, 0) and noise_sd be positive")
            }
            _ => Ok(()),
        }
    }
}

struct Draws(ChaCha8Rng);

impl Draws {
    fn z(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    fn walk(&mut self, t: usize, drift: f64) -> Vec<f64> {
        let mut v = 0.0;
        (0..t)
            .map(|_| {
                v += drift + self.z();
                v
            })
            .collect()
    }

    fn ar(&mut self, t: usize, rho: f64, sd: f64) -> Vec<f64> {
        let mut v = sd * self.z() / (1.0 - rho * rho).sqrt();
        (0..t)
            .map(|_| {
                let out = v;
                v = rho * v + sd * self.z();
                out
            })
            .collect()
    }
}

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|j| format!("{prefix}{j}")).collect()
}

/// Generate the panel for `spec` (stream 0).
pub fn synth_dgp(spec: &DgpSpec) -> Result<Panel> {
    synth_dgp_stream(spec, 0)
}

/// Generate replication `stream` of `spec`.
pub fn synth_dgp_stream(spec: &DgpSpec, stream: u64) -> Result<Panel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);
    let mut d = Draws(rng);
    let (n, t) = (spec.n, spec.t);
    let entities: Vec<String> = (1..=n).map(|i| format!("E{i:02}")).collect();
    let (variables, series): (Vec<String>, Vec<Vec<Vec<f64>>>) = match &spec.dgp {
        Dgp::IndependentRandomWalks { regressors, drift_y, drift_x } => {
            let mut vars = vec!["y".to_string()];
            vars.extend(names("x", *regressors));
            let mut out = vec![Vec::with_capacity(n); 1 + regressors];
            for _ in 0..n {
                out[0].push(d.walk(t, *drift_y));
                for block in out.iter_mut().skip(1) {
                    block.push(d.walk(t, *drift_x));
                }
            }
            (vars, out)
        }
        Dgp::CointegratedHomogeneous { beta, noise_sd, error_ar } => {
            cointegrated(&mut d, n, t, beta, 0.0, *noise_sd, *error_ar)
        }
        Dgp::CointegratedHeterogeneous { beta, beta_sd, noise_sd, error_ar } => {
            cointegrated(&mut d, n, t, beta, *beta_sd, *noise_sd, *error_ar)
        }
        Dgp::EcmPmg { theta, phi, noise_sd } => {
            let m = theta.len();
            let mut vars = vec!["y".to_string()];
            vars.extend(names("x", m));
            let mut out = vec![Vec::with_capacity(n); 1 + m];
            for i in 0..n {
                let phi_i = phi[i % phi.len()];
                let c = 0.1 * d.z();
                let xs: Vec<Vec<f64>> = (0..m).map(|_| d.walk(t, 0.0)).collect();
                let mut y = Vec::with_capacity(t);
                let mut level = theta.iter().zip(&xs).map(|(b, x)| b * x[0]).sum::<f64>() + noise_sd * d.z();
                y.push(level);
                for s in 1..t {
                    let eq = level - theta.iter().zip(&xs).map(|(b, x)| b * x[s - 1]).sum::<f64>();
                    level += c + phi_i * eq + noise_sd * d.z();
                    y.push(level);
                }
                out[0].push(y);
                for (k, x) in xs.into_iter().enumerate() {
                    out[1 + k].push(x);
                }
            }
            (vars, out)
        }
        Dgp::CausalVar { causal, ar_y, ar_x } => {
            let mut ys = Vec::with_capacity(n);
            let mut xs = Vec::with_capacity(n);
            for _ in 0..n {
                let mut x = vec![0.0; t];
                let mut y = vec![0.0; t];
                x[0] = d.z();
                y[0] = d.z();
                for s in 1..t {
                    x[s] = ar_x * x[s - 1] + d.z();
                    y[s] = ar_y * y[s - 1] + causal * x[s - 1] + d.z();
                }
                ys.push(y);
                xs.push(x);
            }
            (vec!["y".into(), "x1".into()], vec![ys, xs])
        }
        Dgp::PaperShaped(p) => paper_shaped(&mut d, n, t, p),
    };
    Panel::from_series(entities, start(), variables, series)
}

fn cointegrated(
    d: &mut Draws,
    n: usize,
    t: usize,
    beta: &[f64],
    beta_sd: f64,
    noise_sd: f64,
    error_ar: f64,
) -> (Vec<String>, Vec<Vec<Vec<f64>>>) {
    let m = beta.len();
    let mut vars = vec!["y".to_string()];
    vars.extend(names("x", m));
    let mut out = vec![Vec::with_capacity(n); 1 + m];
    for _ in 0..n {
        let alpha = d.z();
        let b: Vec<f64> = beta.iter().map(|b| b + beta_sd * d.z()).collect();
        let xs: Vec<Vec<f64>> = (0..m).map(|_| d.walk(t, 0.0)).collect();
        let u = d.ar(t, error_ar, noise_sd);
        let y = (0..t).map(|s| alpha + u[s] + b.iter().zip(&xs).map(|(b, x)| b * x[s]).sum::<f64>()).collect();
        out[0].push(y);
        for (k, x) in xs.into_iter().enumerate() {
            out[1 + k].push(x);
        }
    }
    (vars, out)
}

fn paper_shaped(d: &mut Draws, n: usize, t: usize, p: &PaperShaped) -> (Vec<String>, Vec<Vec<Vec<f64>>>) {
    let vars = ["EXRATE", "FLOW", "HP", "INCOME", "INST", "INTEREST", "STOCKPRICE"];
    let mut out = vec![Vec::with_capacity(n); vars.len()];
    for _ in 0..n {
        let flow_mean = 8.0 + 0.5 * d.z();
        let flow: Vec<f64> = d.ar(t, 0.8, 0.5).into_iter().map(|v| v + flow_mean).collect();
        let interest_mean = 4.0 + 0.5 * d.z();
        let interest: Vec<f64> = d.ar(t, 0.8, 0.3).into_iter().map(|v| v + interest_mean).collect();
        let years = t.div_ceil(4);
        let mut score = 70.0 + 5.0 * d.z();
        let annual: Vec<f64> = (0..years)
            .map(|_| {
                score += 2.0 * d.z();
                score
            })
            .collect();
        let inst: Vec<f64> = (0..t).map(|s| annual[s / 4]).collect();
        let mut hp = vec![0.0; t];
        hp[0] = 4.6 + 0.1 * d.z();
        hp[1] = hp[0] + p.noise_sd * d.z();
        for s in 2..t {
            let dlag = hp[s - 1] - hp[s - 2];
            let dh = p.adjustment * (hp[s - 1] - 4.6)
                + p.flow_effect * (flow[s - 1] - flow_mean)
                + p.interaction_effect * (inst[s - 1] * flow[s - 1] - 70.0 * flow_mean)
                + p.interest_effect * (interest[s - 1] - interest_mean)
                + p.momentum * dlag
                + p.noise_sd * d.z();
            hp[s] = hp[s - 1] + dh;
        }
        let income: Vec<f64> = d.walk(t, 0.01).into_iter().map(|v| 9.0 + 0.02 * v).collect();
        let exrate: Vec<f64> = d.walk(t, 0.0).into_iter().map(|v| 3.5 + 0.02 * v).collect();
        let stock: Vec<f64> = d.walk(t, 0.005).into_iter().map(|v| 8.0 + 0.05 * v).collect();
        for (slot, s) in out.iter_mut().zip([exrate, flow, hp, income, inst, interest, stock]) {
            slot.push(s);
        }
    }
    (vars.iter().map(|s| s.to_string()).collect(), out)
}

/// CSV renderings of the paper-shaped fixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureFiles {
    /// Every variable, `INST` step-held to quarters.
    pub full: String,
    /// Every variable except `INST`.
    pub quarterly: String,
    /// `entity,year,INST`.
    pub annual_inst: String,
}

pub fn paper_fixture_files(seed: u64) -> Result<FixtureFiles> {
    let panel = synth_dgp(&DgpSpec::paper_fixture(seed))?;
    let render = |f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| {
        let mut buf = Vec::new();
        f(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    };
    let quarterly: Vec<String> = panel.variables().iter().filter(|v| *v != "INST").cloned().collect();
    Ok(FixtureFiles {
        full: render(&|b| write_panel_csv(&panel, b)),
        quarterly: render(&|b| write_panel_columns(&panel, &quarterly, b)),
        annual_inst: render(&|b| write_annual_csv(&panel, "INST", b)),
    })
}
