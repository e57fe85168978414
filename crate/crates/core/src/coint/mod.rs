//! Residual-based panel cointegration tests.
//!
//! [`kao_test`] imposes a common cointegrating vector and reports Kao's five
//! Dickey-Fuller type statistics; [`pedroni_test`] allows panel-specific
//! vectors and trends and reports the variance-ratio, Phillips-Perron and
//! ADF statistics in panel (within) or group (between) form.

mod kao;
mod moments;
mod pedroni;

use serde::{Deserialize, Serialize};

pub use kao::{kao_test, KAO_STATISTICS};
pub use moments::{simulate_moments, MomentCase, StatMoments, PEDRONI_MAX_REGRESSORS};
pub use pedroni::{pedroni_entity_terms, pedroni_test, PedroniEntityTerms, PEDRONI_GROUP_STATISTICS, PEDRONI_PANEL_STATISTICS};

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regress::DEFAULT_BANDWIDTH;
use crate::stats::Tail;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorHomogeneity {
    SameForAllPanels,
    PanelSpecific,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PanelDeterministic {
    PanelMeans,
    PanelMeansTrends,
}

/// Pedroni standardization: pooled-within ("panel") or averaged-between
/// ("group") statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Standardization {
    #[default]
    Panel,
    Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointSpec {
    pub dependent: String,
    pub regressors: Vec<String>,
    pub vector_homogeneity: VectorHomogeneity,
    pub deterministic: PanelDeterministic,
    pub bandwidth: usize,
    pub aug_lags: usize,
}

impl CointSpec {
    /// Kao defaults: common vector, panel means, bandwidth 3, one
    /// augmentation lag.
    pub fn kao(dependent: &str, regressors: &[&str]) -> Self {
        Self {
            dependent: dependent.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            vector_homogeneity: VectorHomogeneity::SameForAllPanels,
            deterministic: PanelDeterministic::PanelMeans,
            bandwidth: DEFAULT_BANDWIDTH,
            aug_lags: 1,
        }
    }

    /// Pedroni defaults: panel-specific vectors, means and trends,
    /// bandwidth 3, one augmentation lag.
    pub fn pedroni(dependent: &str, regressors: &[&str]) -> Self {
        Self {
            vector_homogeneity: VectorHomogeneity::PanelSpecific,
            deterministic: PanelDeterministic::PanelMeansTrends,
            ..Self::kao(dependent, regressors)
        }
    }

    fn validate(&self, panel: &Panel) -> Result<()> {
        if self.regressors.is_empty() {
            return Err(Error::InvalidParameters("at least one regressor required".into()));
        }
        panel.variable_index(&self.dependent)?;
        for r in &self.regressors {
            panel.variable_index(r)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestFamily {
    Kao,
    Pedroni,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointStatistic {
    pub name: String,
    pub value: f64,
    pub p_value: f64,
    pub tail: Tail,
}

impl CointStatistic {
    fn new(name: &str, value: f64, tail: Tail) -> Self {
        Self {
            name: name.to_string(),
            value,
            p_value: tail.p_value(value),
            tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointReport {
    pub test_family: TestFamily,
    pub statistics: Vec<CointStatistic>,
    pub n_panels: usize,
    pub n_periods_used: usize,
    pub spec: CointSpec,
    /// Pedroni only.
    pub standardization: Option<Standardization>,
    pub warnings: Vec<String>,
}

impl CointReport {
    pub fn statistic(&self, name: &str) -> Option<&CointStatistic> {
        self.statistics.iter().find(|s| s.name == name)
    }
}

/// Dependent series and `T × m` regressor matrix for one entity.
pub(crate) fn entity_data(panel: &Panel, e: usize, spec: &CointSpec) -> Result<(Vec<f64>, nalgebra::DMatrix<f64>)> {
    let y = panel.series(e, &spec.dependent)?.to_vec();
    let cols: Vec<&[f64]> = spec
        .regressors
        .iter()
        .map(|r| panel.series(e, r))
        .collect::<Result<_>>()?;
    let x = nalgebra::DMatrix::from_fn(y.len(), cols.len(), |t, j| cols[j][t]);
    Ok((y, x))
}

/// Minimum effective periods after lagging for either test.
pub const MIN_EFFECTIVE_PERIODS: usize = 8;
