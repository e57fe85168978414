use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xtpanel_cli::ingest::ingest_csv;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_xtpanel"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn pipeline_writes_reports_and_exits_zero() {
    let out = tempfile::tempdir().unwrap();
    let o = run(bin()
        .args(["pipeline", "-c"])
        .arg(fixtures().join("pipeline.toml"))
        .arg("--output-dir")
        .arg(out.path()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("== Kao test for cointegration =="));
    for f in ["bundle.json", "report.txt", "descriptive.json", "kao.json", "pedroni.json", "causality.json", "fmols.json", "pmg.json", "fe-ecm.json"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    assert_eq!(std::fs::read_to_string(out.path().join("report.txt")).unwrap(), stdout);
}

#[test]
fn bad_quarter_exits_two_and_names_cell() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "entity,period,HP\nA,2009Q1,1\nA,2009Q5,2\n").unwrap();
    let o = run(bin().args(["describe", "-i"]).arg(&csv).args(["--regressors", "HP"]));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("row 3, column `period`"), "{err}");
    assert!(err.contains("2009Q5"), "{err}");
}

#[test]
fn single_entity_pedroni_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    let text = std::fs::read_to_string(fixtures().join("paper_shaped.csv")).unwrap();
    let one: String = text.lines().filter(|l| l.starts_with("entity") || l.starts_with("E02,")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&csv, one).unwrap();
    let o = run(bin().args(["coint", "pedroni", "-i"]).arg(&csv));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stdout).unwrap().contains("Descriptive statistics"));
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "input = \"x.csv\"\nbandwith = 3\n").unwrap();
    let o = run(bin().args(["pipeline", "-c"]).arg(&cfg));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_fixture_matches_bundled_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let o = run(bin().args(["simulate", "--fixture", "-o"]).arg(&out));
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        std::fs::read_to_string(fixtures().join("paper_shaped.csv")).unwrap()
    );
}

#[test]
fn ingest_expands_annual_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("merged.csv");
    let annual = format!("{}:INST", fixtures().join("inst_annual.csv").display());
    let o = run(bin()
        .args(["ingest", "-i"])
        .arg(fixtures().join("paper_quarterly.csv"))
        .args(["--annual", &annual, "-o"])
        .arg(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let merged = ingest_csv(&out, &[]).unwrap();
    let full = ingest_csv(&fixtures().join("paper_shaped.csv"), &[]).unwrap();
    assert_eq!(merged.variables(), full.variables());
    for v in full.variables() {
        for e in 0..full.n_entities() {
            assert_eq!(merged.series(e, v).unwrap(), full.series(e, v).unwrap(), "{v}");
        }
    }
}

#[test]
fn validate_prints_rates() {
    let dir = tempfile::tempdir().unwrap();
    let dgp = dir.path().join("dgp.toml");
    std::fs::write(&dgp, "family = \"causal-var\"\ncausal = 0.0\nar_y = 0.5\nar_x = 0.5\nn = 6\nt = 41\nseed = 3\n").unwrap();
    let o = run(bin().args(["validate", "dh", "--dgp"]).arg(&dgp).args(["--reps", "100"]));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["successful"], 100);
    assert_eq!(v["rates"].as_array().unwrap().len(), 2);
    let o = run(bin().args(["validate", "dh", "--dgp"]).arg(&dgp).args(["--reps", "10"]));
    assert_eq!(o.status.code(), Some(2));
}
