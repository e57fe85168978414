//! Rejection-rate studies over synthetic replications.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xtpanel::causality::dh_test;
use xtpanel::coint::{kao_test, pedroni_test, CointSpec, PanelDeterministic, Standardization};
use xtpanel::{Error, Panel, Result};

use crate::sim::{synth_dgp_stream, Dgp, DgpSpec};

pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McTest {
    Kao,
    Pedroni,
    PedroniGroup,
    /// Dumitrescu-Hurlin with lag order `k`, `x1` → `y`.
    Dh { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub statistic: String,
    pub rejections: usize,
    pub rate: f64,
    /// Binomial standard error `sqrt(r(1−r)/n)` over successful replications.
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub test: McTest,
    pub dgp: DgpSpec,
    pub reps: usize,
    pub nominal: f64,
    pub successful: usize,
    pub failed: usize,
    /// First few replication errors, `(replication, message)`.
    pub failures: Vec<(usize, String)>,
    pub rates: Vec<RejectionRate>,
}

impl McReport {
    pub fn rate(&self, statistic: &str) -> Option<f64> {
        self.rates.iter().find(|r| r.statistic == statistic).map(|r| r.rate)
    }
}

fn coint_spec(dgp: &DgpSpec, panel: &Panel, kao: bool) -> CointSpec {
    let regressors: Vec<&str> = panel.variables().iter().filter(|v| *v != "y").map(|s| s.as_str()).collect();
    let mut spec = if kao {
        CointSpec::kao("y", &regressors)
    } else {
        CointSpec::pedroni("y", &regressors)
    };
    let trending = matches!(dgp.dgp, Dgp::IndependentRandomWalks { drift_y, drift_x, .. } if drift_y != 0.0 || drift_x != 0.0);
    if !kao && trending {
        spec.deterministic = PanelDeterministic::PanelMeansTrends;
    }
    spec
}

/// `(statistic name, p-value)` pairs for one replication.
fn run_once(test: McTest, dgp: &DgpSpec, panel: &Panel) -> Result<Vec<(String, f64)>> {
    let pairs = match test {
        McTest::Kao => {
            let r = kao_test(panel, &coint_spec(dgp, panel, true))?;
            r.statistics.into_iter().map(|s| (s.name, s.p_value)).collect()
        }
        McTest::Pedroni | McTest::PedroniGroup => {
            let st = if test == McTest::Pedroni { Standardization::Panel } else { Standardization::Group };
            let r = pedroni_test(panel, &coint_spec(dgp, panel, false), st)?;
            r.statistics.into_iter().map(|s| (s.name, s.p_value)).collect()
        }
        McTest::Dh { k } => {
            let r = dh_test(panel, "x1", "y", k)?;
            vec![("Z-bar".into(), r.p_values.z_bar), ("Z-bar tilde".into(), r.p_values.z_bar_tilde)]
        }
    };
    Ok(pairs)
}

/// Run `reps` replications; `parallel` only changes scheduling, never the
/// draws or the result.
pub fn monte_carlo(test: McTest, dgp: &DgpSpec, reps: usize, nominal: f64, parallel: bool) -> Result<McReport> {
    if reps < MIN_REPS {
        return Err(Error::InvalidParameters(format!("at least {MIN_REPS} replications required, got {reps}")));
    }
    if !(nominal > 0.0 && nominal < 1.0) {
        return Err(Error::InvalidParameters(format!("nominal level {nominal} outside (0, 1)")));
    }
    dgp.validate()?;
    let one = |rep: usize| -> Result<Vec<(String, f64)>> {
        let panel = synth_dgp_stream(dgp, rep as u64 + 1)?;
        run_once(test, dgp, &panel)
    };
    let outcomes: Vec<Result<Vec<(String, f64)>>> = if parallel {
        (0..reps).into_par_iter().map(one).collect()
    } else {
        (0..reps).map(one).collect()
    };

    let mut names: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut successful = 0;
    let mut failures = Vec::new();
    let mut failed = 0;
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(pairs) => {
                successful += 1;
                for (name, p) in pairs {
                    let j = match names.iter().position(|n| *n == name) {
                        Some(j) => j,
                        None => {
                            names.push(name);
                            counts.push(0);
                            names.len() - 1
                        }
                    };
                    if p < nominal {
                        counts[j] += 1;
                    }
                }
            }
            Err(e) => {
                failed += 1;
                if failures.len() < 10 {
                    failures.push((rep, e.to_string()));
                }
            }
        }
    }
    let denom = successful.max(1) as f64;
    let rates = names
        .into_iter()
        .zip(counts)
        .map(|(statistic, rejections)| {
            let rate = rejections as f64 / denom;
            RejectionRate {
                statistic,
                rejections,
                rate,
                standard_error: (rate * (1.0 - rate) / denom).sqrt(),
            }
        })
        .collect();
    Ok(McReport {
        test,
        dgp: dgp.clone(),
        reps,
        nominal,
        successful,
        failed,
        failures,
        rates,
    })
}
