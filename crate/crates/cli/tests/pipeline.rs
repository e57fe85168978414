use std::path::{Path, PathBuf};

use xtpanel_cli::config::{PipelineConfig, Stages};
use xtpanel_cli::error::{CliError, Stage};
use xtpanel_cli::ingest::ingest_csv;
use xtpanel_cli::pipeline::{load_panel, run_pipeline};
use xtpanel_cli::report::{Cell, ReportBundle};
use xtpanel_cli::sim::{paper_fixture_files, FIXTURE_SEED};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn config(name: &str) -> PipelineConfig {
    PipelineConfig::load(&fixtures().join(name)).unwrap()
}

fn full_bundle() -> ReportBundle {
    run_pipeline(&config("pipeline.toml")).unwrap()
}

#[test]
fn bundled_fixture_regenerates_exactly() {
    let files = paper_fixture_files(FIXTURE_SEED).unwrap();
    let read = |n: &str| std::fs::read_to_string(fixtures().join(n)).unwrap();
    assert_eq!(read("paper_shaped.csv"), files.full);
    assert_eq!(read("paper_quarterly.csv"), files.quarterly);
    assert_eq!(read("inst_annual.csv"), files.annual_inst);
}

#[test]
fn fixture_ingests_with_246_rows() {
    let p = ingest_csv(&fixtures().join("paper_shaped.csv"), &[]).unwrap();
    assert_eq!(p.n_entities(), 6);
    assert_eq!(p.n_periods(), 41);
    assert_eq!(p.rows_per_variable(), 246);
}

#[test]
fn annual_inst_path_gives_same_panel_and_report() {
    let full = load_panel(&config("pipeline.toml")).unwrap();
    let annual = load_panel(&config("pipeline_annual.toml")).unwrap();
    for v in full.variables() {
        for e in 0..full.n_entities() {
            assert_eq!(full.series(e, v).unwrap(), annual.series(e, v).unwrap(), "{v}");
        }
    }
    assert_eq!(run_pipeline(&config("pipeline_annual.toml")).unwrap().to_json(), full_bundle().to_json());
}

#[test]
fn full_pipeline_has_seven_sections_and_sample_counts() {
    let b = full_bundle();
    let stages: Vec<Stage> = b.sections().iter().map(|s| s.stage).collect();
    assert_eq!(
        stages,
        [
            Stage::Descriptive,
            Stage::Kao,
            Stage::Pedroni,
            Stage::Causality,
            Stage::Fmols,
            Stage::Pmg,
            Stage::FeEcm
        ]
    );
    assert_eq!(b.descriptive.as_ref().unwrap().rows[0].n_obs, 246);
    assert_eq!(b.kao.as_ref().unwrap().n_periods_used, 39);
    assert_eq!(b.pedroni.as_ref().unwrap().n_periods_used, 40);
    assert_eq!(b.causality.as_ref().unwrap().len(), 2);
    let fe = b.fe_ecm.as_ref().unwrap();
    assert_eq!(fe.len(), 2);
    assert!(fe.iter().all(|r| r.n_obs == 234));
    assert!(!fe[0].time_fe && fe[1].time_fe);
    assert!(b.failure.is_none());
}

#[test]
fn causality_only_config() {
    let mut c = config("pipeline.toml");
    c.stages = Stages::all(false);
    c.stages.descriptive = true;
    c.stages.causality = true;
    let b = run_pipeline(&c).unwrap();
    let stages: Vec<Stage> = b.sections().iter().map(|s| s.stage).collect();
    assert_eq!(stages, [Stage::Descriptive, Stage::Causality]);
}

#[test]
fn single_entity_pedroni_is_a_stage_error_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    let text = std::fs::read_to_string(fixtures().join("paper_shaped.csv")).unwrap();
    let one: String = text.lines().filter(|l| l.starts_with("entity") || l.starts_with("E01,")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&csv, one).unwrap();
    let mut c = PipelineConfig::new(&csv);
    c.stages = Stages::all(false);
    c.stages.descriptive = true;
    c.stages.pedroni = true;
    match run_pipeline(&c) {
        Err(e @ CliError::Stage { .. }) => {
            assert_eq!(e.exit_code(), 3);
            let msg = e.to_string();
            assert!(msg.contains("pedroni"), "{msg}");
            assert!(msg.contains('2'), "{msg}");
            let CliError::Stage { stage, partial, .. } = e else { unreachable!() };
            assert_eq!(stage, Stage::Pedroni);
            assert!(partial.descriptive.is_some());
            assert_eq!(partial.failure.as_ref().unwrap().stage, Stage::Pedroni);
            assert!(partial.render_text().contains("stage `pedroni` failed"));
        }
        other => panic!("expected a stage error, got {other:?}"),
    }
}

#[test]
fn missing_column_is_a_config_error() {
    let mut c = config("pipeline.toml");
    c.model.regressors.push("GDP".into());
    let e = run_pipeline(&c).unwrap_err();
    assert!(matches!(e, CliError::Config(_)), "{e}");
    assert_eq!(e.exit_code(), 2);
}

/// Every rendered cell reads back as the machine-readable value it came
/// from, to the four displayed decimals.
#[test]
fn renderer_fidelity() {
    let b = full_bundle();
    let json: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
    assert!(json.get("kao").is_some());
    let mut checked = 0;
    for section in b.sections() {
        for table in &section.tables {
            let text = table.render();
            let lw = table.label_width();
            let lines: Vec<&str> = text.lines().skip(2).collect();
            assert_eq!(lines.len(), table.rows.len());
            for (line, row) in lines.iter().zip(&table.rows) {
                let body: String = line.chars().skip(lw).collect();
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let cells: Vec<&Cell> = row.cells.iter().filter(|c| !matches!(c, Cell::Empty)).collect();
                assert_eq!(tokens.len(), cells.len(), "{line}");
                for (tok, cell) in tokens.iter().zip(cells) {
                    let Some(v) = cell.value() else {
                        continue;
                    };
                    let digits = tok.trim_end_matches('*').trim_start_matches('(').trim_end_matches(')');
                    if !v.is_finite() {
                        assert_eq!(digits, "NaN");
                        continue;
                    }
                    let shown: f64 = digits.parse().unwrap_or_else(|_| panic!("`{tok}` in {line}"));
                    assert!((shown - v).abs() <= 5e-5 + 1e-12 * v.abs(), "{tok} vs {v}");
                    if let Cell::Estimate { p_value, .. } = cell {
                        assert_eq!(&tok[tok.trim_end_matches('*').len()..], xtpanel::stats::stars(*p_value));
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 200, "{checked}");
}

#[test]
fn machine_values_trace_to_module_outputs() {
    let b = full_bundle();
    let sections = b.sections();
    let kao = &sections[1].tables[0];
    let r = b.kao.as_ref().unwrap();
    for (row, s) in kao.rows.iter().zip(&r.statistics) {
        assert_eq!(row.label, s.name);
        assert_eq!(row.cells[0].value(), Some(s.value));
    }
    let fe = &sections[6].tables[0];
    let l_flow = fe.rows.iter().find(|r| r.label == "L.FLOW").unwrap();
    assert_eq!(l_flow.cells[1].value(), b.fe_ecm.as_ref().unwrap()[1].coefficient("L.FLOW"));
}
