//! TOML pipeline configuration.
//!
//! ```toml
//! input = "paper_shaped.csv"
//! output_dir = "out"
//!
//! [[variables]]
//! column = "HP"
//! transform = "natural-log"
//!
//! [[annual]]
//! path = "inst_annual.csv"
//! column = "INST"
//!
//! [stages]
//! pmg = false
//!
//! [parameters]
//! bandwidth = 3
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use xtpanel::coint::Standardization;
use xtpanel::fe_ecm::Covariance;
use xtpanel::pmg::ArdlOrder;
use xtpanel::regress::DEFAULT_BANDWIDTH;

use crate::error::{CliError, CliResult};
use crate::ingest::VariableMapping;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnualInput {
    pub path: PathBuf,
    pub column: String,
    /// Defaults to the column name.
    #[serde(default)]
    pub name: Option<String>,
}

impl AnnualInput {
    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.column)
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    #[serde(default = "yes")]
    pub descriptive: bool,
    #[serde(default = "yes")]
    pub kao: bool,
    #[serde(default = "yes")]
    pub pedroni: bool,
    #[serde(default = "yes")]
    pub causality: bool,
    #[serde(default = "yes")]
    pub fmols: bool,
    #[serde(default = "yes")]
    pub pmg: bool,
    #[serde(default = "yes")]
    pub fe_ecm: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Self::all(true)
    }
}

impl Stages {
    pub fn all(on: bool) -> Self {
        Self {
            descriptive: on,
            kao: on,
            pedroni: on,
            causality: on,
            fmols: on,
            pmg: on,
            fe_ecm: on,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Direction {
    pub cause: String,
    pub effect: String,
}

/// Which fixed-effect columns the ECM table carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeEffects {
    Without,
    With,
    #[default]
    Both,
}

impl TimeEffects {
    pub fn columns(self) -> &'static [bool] {
        match self {
            TimeEffects::Without => &[false],
            TimeEffects::With => &[true],
            TimeEffects::Both => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    #[serde(default = "default_dependent")]
    pub dependent: String,
    #[serde(default = "default_regressors")]
    pub regressors: Vec<String>,
    /// Columns of the descriptive table; defaults to the dependent variable
    /// followed by the regressors.
    #[serde(default)]
    pub describe: Option<Vec<String>>,
    #[serde(default = "default_directions")]
    pub causality: Vec<Direction>,
    #[serde(default = "default_inst")]
    pub inst: String,
    #[serde(default = "default_flow")]
    pub flow: String,
    /// Plain regressors of the fixed-effect ECM after the interaction.
    #[serde(default = "default_ecm_others")]
    pub ecm_others: Vec<String>,
}

fn default_dependent() -> String {
    "HP".into()
}

fn default_regressors() -> Vec<String> {
    ["FLOW", "INCOME", "INTEREST", "EXRATE", "STOCKPRICE"].map(String::from).to_vec()
}

fn default_directions() -> Vec<Direction> {
    vec![
        Direction { cause: "FLOW".into(), effect: "HP".into() },
        Direction { cause: "HP".into(), effect: "FLOW".into() },
    ]
}

fn default_inst() -> String {
    "INST".into()
}

fn default_flow() -> String {
    "FLOW".into()
}

fn default_ecm_others() -> Vec<String> {
    vec!["INTEREST".into()]
}

impl Default for Model {
    fn default() -> Self {
        Self {
            dependent: default_dependent(),
            regressors: default_regressors(),
            describe: None,
            causality: default_directions(),
            inst: default_inst(),
            flow: default_flow(),
            ecm_others: default_ecm_others(),
        }
    }
}

impl Model {
    pub fn describe_variables(&self) -> Vec<String> {
        self.describe.clone().unwrap_or_else(|| {
            let mut v = vec![self.dependent.clone()];
            v.extend(self.regressors.iter().cloned());
            v
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    #[serde(default = "default_bandwidth")]
    pub bandwidth: usize,
    #[serde(default = "one")]
    pub aug_lags: usize,
    /// Lag order K of the causality regressions.
    #[serde(default = "two")]
    pub causality_lags: usize,
    #[serde(default)]
    pub pedroni: Standardization,
    /// Defaults to [`ArdlOrder::default_for`] on the regressors.
    #[serde(default)]
    pub ardl: Option<ArdlOrder>,
    #[serde(default)]
    pub time_effects: TimeEffects,
    #[serde(default)]
    pub covariance: Covariance,
}

fn default_bandwidth() -> usize {
    DEFAULT_BANDWIDTH
}

fn one() -> usize {
    1
}

fn two() -> usize {
    2
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            bandwidth: DEFAULT_BANDWIDTH,
            aug_lags: 1,
            causality_lags: 2,
            pedroni: Standardization::Panel,
            ardl: None,
            time_effects: TimeEffects::Both,
            covariance: Covariance::Conventional,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Empty keeps every column in levels.
    #[serde(default)]
    pub variables: Vec<VariableMapping>,
    #[serde(default)]
    pub annual: Vec<AnnualInput>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stages: Stages,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub parameters: Parameters,
}

fn default_output() -> PathBuf {
    PathBuf::from("report")
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            variables: Vec::new(),
            annual: Vec::new(),
            output_dir: default_output(),
            seed: 0,
            stages: Stages::default(),
            model: Model::default(),
            parameters: Parameters::default(),
        }
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Parse `path` and resolve its relative paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.input);
        fix(&mut self.output_dir);
        for a in &mut self.annual {
            fix(&mut a.path);
        }
    }

    /// Parameter checks that do not need the data.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.model.regressors.is_empty() {
            return bad("model.regressors must not be empty".into());
        }
        if self.parameters.causality_lags == 0 {
            return bad("parameters.causality_lags must be at least 1".into());
        }
        if let Some(order) = &self.parameters.ardl {
            if order.p == 0 {
                return bad("parameters.ardl.p must be at least 1".into());
            }
            if order.q.len() != self.model.regressors.len() {
                return bad(format!(
                    "parameters.ardl.q has {} entries for {} regressors",
                    order.q.len(),
                    self.model.regressors.len()
                ));
            }
        }
        Ok(())
    }

    pub fn ardl_order(&self) -> ArdlOrder {
        self.parameters.ardl.clone().unwrap_or_else(|| ArdlOrder::default_for(&self.model.regressors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = PipelineConfig::from_toml("input = \"x.csv\"").unwrap();
        assert_eq!(c.model.dependent, "HP");
        assert_eq!(c.model.causality.len(), 2);
        assert_eq!(c.parameters.bandwidth, 3);
        assert_eq!(c.parameters.causality_lags, 2);
        assert!(c.stages.pmg && c.stages.fe_ecm);
        assert_eq!(c.ardl_order().q, [4, 1, 1, 1, 1]);
    }

    #[test]
    fn stage_toggles_and_unknown_keys() {
        let c = PipelineConfig::from_toml("input = \"x.csv\"\n[stages]\nkao = false\n").unwrap();
        assert!(!c.stages.kao && c.stages.pedroni);
        assert!(matches!(PipelineConfig::from_toml("input = \"x\"\nbandwdth = 3"), Err(CliError::Config(_))));
    }

    #[test]
    fn ardl_length_checked() {
        let text = "input = \"x\"\n[parameters.ardl]\np = 1\nq = [1]\n";
        assert!(PipelineConfig::from_toml(text).is_err());
    }

    #[test]
    fn relative_paths_follow_config() {
        let mut c = PipelineConfig::from_toml("input = \"d.csv\"\noutput_dir = \"/abs/out\"").unwrap();
        c.resolve_paths(Path::new("/cfg"));
        assert_eq!(c.input, Path::new("/cfg/d.csv"));
        assert_eq!(c.output_dir, Path::new("/abs/out"));
    }

    #[test]
    fn toml_round_trip() {
        let c = PipelineConfig::new("a.csv");
        let text = toml::to_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn readme_example_parses() {
        let readme = include_str!("../../../README.md");
        let text = readme.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
        let c = PipelineConfig::from_toml(text).unwrap();
        assert_eq!(c.variables[0].spec().name, "HP");
        assert!(!c.stages.pmg && c.stages.kao);
        assert_eq!(c.parameters.time_effects, TimeEffects::Both);
    }
}
