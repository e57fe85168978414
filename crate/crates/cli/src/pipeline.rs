//! Config-driven execution of the full study: descriptives, Kao and Pedroni
//! cointegration, causality, FMOLS, PMG and the fixed-effect ECM.

use std::fs::File;

use xtpanel::causality::dh_test;
use xtpanel::coint::{kao_test, pedroni_test, CointSpec};
use xtpanel::fe_ecm::{build_ecm_design_with, fe_estimate_with};
use xtpanel::fmols::{fmols_panel, FmolsMode};
use xtpanel::pmg::pmg_fit;
use xtpanel::Panel;

use crate::config::PipelineConfig;
use crate::descriptives::describe;
use crate::error::{CliError, CliResult, Stage};
use crate::ingest::{attach_annual, ingest_csv, read_annual_csv};
use crate::report::{FmolsSection, ReportBundle, StageFailure};

/// Read the input CSV and attach every annual series.
pub fn load_panel(config: &PipelineConfig) -> CliResult<Panel> {
    let mut panel = ingest_csv(&config.input, &config.variables)?;
    for a in &config.annual {
        let file = File::open(&a.path).map_err(|e| CliError::io(&a.path, e))?;
        let values = read_annual_csv(file, &a.path.display().to_string(), &a.column)?;
        panel = attach_annual(&panel, &values, a.name())?;
    }
    Ok(panel)
}

/// Variables the enabled stages need, checked before anything runs.
fn check_columns(panel: &Panel, config: &PipelineConfig) -> CliResult<()> {
    let s = &config.stages;
    let m = &config.model;
    let describe_vars = m.describe_variables();
    let mut needed: Vec<&str> = Vec::new();
    if s.descriptive {
        needed.extend(describe_vars.iter().map(String::as_str));
    }
    if s.kao || s.pedroni || s.fmols || s.pmg {
        needed.push(&m.dependent);
        needed.extend(m.regressors.iter().map(String::as_str));
    }
    if s.causality {
        for d in &m.causality {
            needed.push(&d.cause);
            needed.push(&d.effect);
        }
    }
    if s.fe_ecm {
        needed.extend([m.dependent.as_str(), &m.inst, &m.flow]);
        needed.extend(m.ecm_others.iter().map(String::as_str));
    }
    for v in needed {
        if !panel.has_variable(v) {
            return Err(CliError::Config(format!(
                "variable `{v}` is not in the input (available: {})",
                panel.variables().join(", ")
            )));
        }
    }
    Ok(())
}

/// Load the input and run every enabled stage.
pub fn run_pipeline(config: &PipelineConfig) -> CliResult<ReportBundle> {
    config.validate()?;
    let panel = load_panel(config)?;
    run_stages(&panel, config)
}

/// Run the enabled stages in order on one panel. The first failing stage
/// stops the run; its error carries the stages completed so far.
pub fn run_stages(panel: &Panel, config: &PipelineConfig) -> CliResult<ReportBundle> {
    check_columns(panel, config)?;
    let m = &config.model;
    let p = &config.parameters;
    let regs: Vec<&str> = m.regressors.iter().map(String::as_str).collect();
    let with_params = |mut spec: CointSpec| {
        spec.bandwidth = p.bandwidth;
        spec.aug_lags = p.aug_lags;
        spec
    };
    let kao_spec = with_params(CointSpec::kao(&m.dependent, &regs));
    let pedroni_spec = with_params(CointSpec::pedroni(&m.dependent, &regs));

    let mut bundle = ReportBundle::default();
    macro_rules! stage {
        ($stage:expr, $body:expr) => {
            match $body {
                Ok(v) => v,
                Err(source) => {
                    let source: xtpanel::Error = source;
                    bundle.failure = Some(StageFailure {
                        stage: $stage,
                        message: source.to_string(),
                    });
                    return Err(CliError::Stage {
                        stage: $stage,
                        source,
                        partial: Box::new(bundle),
                    });
                }
            }
        };
    }

    if config.stages.descriptive {
        bundle.descriptive = Some(stage!(Stage::Descriptive, describe(panel, &m.describe_variables(), p.aug_lags)));
    }
    if config.stages.kao {
        bundle.kao = Some(stage!(Stage::Kao, kao_test(panel, &kao_spec)));
    }
    if config.stages.pedroni {
        bundle.pedroni = Some(stage!(Stage::Pedroni, pedroni_test(panel, &pedroni_spec, p.pedroni)));
    }
    if config.stages.causality {
        let reports = stage!(
            Stage::Causality,
            m.causality
                .iter()
                .map(|d| dh_test(panel, &d.cause, &d.effect, p.causality_lags))
                .collect::<xtpanel::Result<Vec<_>>>()
        );
        bundle.causality = Some(reports);
    }
    if config.stages.fmols {
        let pooled = stage!(Stage::Fmols, fmols_panel(panel, &kao_spec, FmolsMode::Pooled));
        let grouped = stage!(Stage::Fmols, fmols_panel(panel, &kao_spec, FmolsMode::Grouped));
        bundle.fmols = Some(FmolsSection { pooled, grouped });
    }
    if config.stages.pmg {
        bundle.pmg = Some(stage!(Stage::Pmg, pmg_fit(panel, &m.dependent, &m.regressors, &config.ardl_order())));
    }
    if config.stages.fe_ecm {
        let others: Vec<&str> = m.ecm_others.iter().map(String::as_str).collect();
        let design = stage!(Stage::FeEcm, build_ecm_design_with(panel, &m.dependent, &m.inst, &m.flow, &others));
        let reports = stage!(
            Stage::FeEcm,
            p.time_effects
                .columns()
                .iter()
                .map(|&time_fe| fe_estimate_with(&design, time_fe, p.covariance))
                .collect::<xtpanel::Result<Vec<_>>>()
        );
        bundle.fe_ecm = Some(reports);
    }
    Ok(bundle)
}
