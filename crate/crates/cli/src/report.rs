//! Report bundle and its renderings.
//!
//! Module outputs are kept verbatim in [`ReportBundle`]. [`sections`] lays
//! them out as display tables, copying each number and attaching stars from
//! the module's own p-value; the JSON and text renderers only format those
//! tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use xtpanel::causality::DhReport;
use xtpanel::coint::{CointReport, Standardization};
use xtpanel::fe_ecm::{Covariance, FeEcmReport};
use xtpanel::fmols::FmolsReport;
use xtpanel::pmg::PmgFit;
use xtpanel::stats::stars;

use crate::descriptives::DescriptiveTable;
use crate::error::{CliError, CliResult, Stage};

pub const STAR_NOTE: &str = "* p < 0.1, ** p < 0.05, *** p < 0.01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmolsSection {
    pub pooled: FmolsReport,
    pub grouped: FmolsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub descriptive: Option<DescriptiveTable>,
    pub kao: Option<CointReport>,
    pub pedroni: Option<CointReport>,
    /// One report per configured direction.
    pub causality: Option<Vec<DhReport>>,
    pub fmols: Option<FmolsSection>,
    pub pmg: Option<PmgFit>,
    /// One report per fixed-effect specification, in column order.
    pub fe_ecm: Option<Vec<FeEcmReport>>,
    pub failure: Option<StageFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Cell {
    /// Point estimate or test statistic with its significance.
    Estimate { value: f64, p_value: f64, stars: String },
    /// t or z ratio printed in parentheses under an estimate.
    Ratio { value: f64 },
    Number { value: f64 },
    Count { value: usize },
    Text { text: String },
    Empty,
}

impl Cell {
    fn estimate(value: f64, p_value: f64) -> Self {
        Cell::Estimate {
            value,
            p_value,
            stars: stars(p_value).to_string(),
        }
    }

    /// Display form at four decimals.
    pub fn render(&self) -> String {
        match self {
            Cell::Estimate { value, stars, .. } => format!("{}{stars}", fmt4(*value)),
            Cell::Ratio { value } => format!("({})", fmt4(*value)),
            Cell::Number { value } => fmt4(*value),
            Cell::Count { value } => value.to_string(),
            Cell::Text { text } => text.clone(),
            Cell::Empty => String::new(),
        }
    }

    /// The number the cell carries, if any.
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Estimate { value, .. } | Cell::Ratio { value } | Cell::Number { value } => Some(*value),
            Cell::Count { value } => Some(*value as f64),
            _ => None,
        }
    }
}

fn fmt4(v: f64) -> String {
    if v.is_finite() {
        let s = format!("{v:.4}");
        if s == "-0.0000" { "0.0000".into() } else { s }
    } else {
        "NaN".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

impl Row {
    fn new(label: impl Into<String>, cells: Vec<Cell>) -> Self {
        Self { label: label.into(), cells }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl Table {
    pub fn label_width(&self) -> usize {
        self.rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(8)
    }

    fn widths(&self) -> Vec<usize> {
        (0..self.columns.len())
            .map(|j| {
                self.rows
                    .iter()
                    .filter_map(|r| r.cells.get(j))
                    .map(|c| c.render().chars().count())
                    .chain([self.columns[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Fixed-width text: a title line, a header line, then one line per row
    /// with the label left-aligned in [`Table::label_width`] characters and
    /// each cell right-aligned after two spaces.
    pub fn render(&self) -> String {
        let lw = self.label_width();
        let widths = self.widths();
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.title);
        let mut header = " ".repeat(lw);
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(header, "  {c:>w$}");
        }
        let _ = writeln!(out, "{}", header.trim_end());
        for row in &self.rows {
            let mut line = format!("{:<lw$}", row.label);
            for (c, w) in row.cells.iter().zip(&widths) {
                let _ = write!(line, "  {:>w$}", c.render());
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

/// One stage's tables plus its effective sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub stage: Stage,
    pub title: String,
    pub tables: Vec<Table>,
    pub samples: Vec<(String, usize)>,
    pub warnings: Vec<String>,
}

impl Section {
    pub fn render(&self) -> String {
        let mut out = format!("== {} ==\n", self.title);
        for t in &self.tables {
            out.push_str(&t.render());
            out.push('\n');
        }
        for (name, n) in &self.samples {
            let _ = writeln!(out, "{name}: {n}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn descriptive_section(d: &DescriptiveTable) -> Section {
    let mut columns = d.variables.clone();
    columns.push("No. Obs".into());
    let mut rows = Vec::new();
    for r in &d.rows {
        let label = r.entity.clone().unwrap_or_else(|| "All panels".into());
        let mut means: Vec<Cell> = r.summaries.iter().map(|s| Cell::Number { value: s.mean }).collect();
        means.push(Cell::Count { value: r.n_obs });
        rows.push(Row::new(label, means));
        let mut sds: Vec<Cell> = r.summaries.iter().map(|s| Cell::Number { value: s.sd }).collect();
        sds.push(Cell::Empty);
        rows.push(Row::new("", sds));
    }
    let mut pre_columns = d.entities.clone();
    pre_columns.push("Average".into());
    let mut pre_rows = Vec::new();
    for u in &d.pretest {
        for (label, values, avg) in [
            (u.variable.clone(), &u.level, u.level_mean),
            (format!("D.{}", u.variable), &u.difference, u.difference_mean),
        ] {
            let mut cells: Vec<Cell> = values.iter().map(|&v| Cell::Number { value: v }).collect();
            cells.push(Cell::Number { value: avg });
            pre_rows.push(Row::new(label, cells));
        }
    }
    let aug = d.pretest.first().map_or(0, |u| u.aug_lags);
    let mut tables = vec![Table { title: String::new(), columns, rows }];
    if !pre_rows.is_empty() {
        tables.push(Table {
            title: format!("ADF t pretest by entity, intercept, augmentation lags {aug} (descriptive only)"),
            columns: pre_columns,
            rows: pre_rows,
        });
    }
    Section {
        stage: Stage::Descriptive,
        title: "Descriptive statistics (mean, standard deviation below)".into(),
        tables,
        samples: vec![("Observations".into(), d.rows.first().map_or(0, |r| r.n_obs))],
        warnings: Vec::new(),
    }
}

fn coint_table(title: &str, r: &CointReport) -> Table {
    Table {
        title: title.into(),
        columns: vec!["Statistic".into(), "p-value".into()],
        rows: r
            .statistics
            .iter()
            .map(|s| Row::new(&s.name, vec![Cell::estimate(s.value, s.p_value), Cell::Number { value: s.p_value }]))
            .collect(),
    }
}

fn kao_section(r: &CointReport) -> Section {
    Section {
        stage: Stage::Kao,
        title: "Kao test for cointegration".into(),
        tables: vec![coint_table("H0: no cointegration, Ha: all panels are cointegrated", r)],
        samples: vec![("Panels".into(), r.n_panels), ("Periods used".into(), r.n_periods_used)],
        warnings: r.warnings.clone(),
    }
}

fn pedroni_section(r: &CointReport) -> Section {
    let kind = match r.standardization {
        Some(Standardization::Group) => "group",
        _ => "panel",
    };
    Section {
        stage: Stage::Pedroni,
        title: "Pedroni test for cointegration".into(),
        tables: vec![coint_table(
            &format!("H0: no cointegration, Ha: all panels are cointegrated ({kind} statistics)"),
            r,
        )],
        samples: vec![("Panels".into(), r.n_panels), ("Periods used".into(), r.n_periods_used)],
        warnings: r.warnings.clone(),
    }
}

fn causality_section(reports: &[DhReport]) -> Section {
    let tables = reports
        .iter()
        .map(|r| Table {
            title: format!("H0: {} does not Granger-cause {}", r.cause, r.effect),
            columns: vec!["Statistic".into(), "p-value".into()],
            rows: vec![
                Row::new("W-bar", vec![Cell::Number { value: r.w_bar }, Cell::Empty]),
                Row::new(
                    "Z-bar",
                    vec![Cell::estimate(r.z_bar, r.p_values.z_bar), Cell::Number { value: r.p_values.z_bar }],
                ),
                Row::new(
                    "Z-bar tilde",
                    vec![
                        Cell::estimate(r.z_bar_tilde, r.p_values.z_bar_tilde),
                        Cell::Number { value: r.p_values.z_bar_tilde },
                    ],
                ),
                Row::new("Lag order", vec![Cell::Count { value: r.lag_order }, Cell::Empty]),
            ],
        })
        .collect();
    let mut warnings = Vec::new();
    for r in reports {
        for e in &r.degenerate_entities {
            warnings.push(format!("{} is constant for {e}", r.cause));
        }
    }
    Section {
        stage: Stage::Causality,
        title: "Dumitrescu-Hurlin Granger non-causality test".into(),
        tables,
        samples: reports
            .first()
            .map(|r| vec![("Panels".into(), r.n_panels), ("Periods per regression".into(), r.t_used)])
            .unwrap_or_default(),
        warnings,
    }
}

fn fmols_section(f: &FmolsSection) -> Section {
    let rows = f
        .pooled
        .regressors
        .iter()
        .enumerate()
        .map(|(j, name)| {
            Row::new(
                name,
                vec![
                    Cell::estimate(f.pooled.coefficients[j], f.pooled.p_values[j]),
                    Cell::Number { value: f.pooled.t_stats[j] },
                    Cell::estimate(f.grouped.coefficients[j], f.grouped.p_values[j]),
                    Cell::Number { value: f.grouped.t_stats[j] },
                ],
            )
        })
        .collect();
    Section {
        stage: Stage::Fmols,
        title: "Panel fully modified OLS".into(),
        tables: vec![Table {
            title: String::new(),
            columns: ["Pooled Coef", "Pooled t", "Grouped Coef", "Grouped t"].map(String::from).to_vec(),
            rows,
        }],
        samples: vec![
            ("Panels".into(), f.pooled.per_entity.len()),
            ("Observations used".into(), f.pooled.n_obs_used),
            ("Bandwidth".into(), f.pooled.bandwidth),
        ],
        warnings: Vec::new(),
    }
}

fn pmg_section(fit: &PmgFit) -> Section {
    let long_run = Table {
        title: format!("Long-run coefficients, dependent variable {}", fit.dependent),
        columns: vec!["Coefficient".into(), "Std. Err.".into(), "z".into()],
        rows: fit
            .regressors
            .iter()
            .enumerate()
            .map(|(k, name)| {
                Row::new(
                    name,
                    vec![
                        Cell::estimate(fit.theta[k], fit.theta_p[k]),
                        Cell::Number { value: fit.theta_se[k] },
                        Cell::Number { value: fit.theta_z[k] },
                    ],
                )
            })
            .collect(),
    };
    let columns: Vec<String> = fit.pooled.iter().map(|p| p.name.clone()).collect();
    let mut rows = vec![
        Row::new("Total", fit.pooled.iter().map(|p| Cell::estimate(p.estimate, p.p_value)).collect()),
        Row::new("", fit.pooled.iter().map(|p| Cell::Ratio { value: p.z_stat }).collect()),
    ];
    for s in &fit.short_run {
        let mut est = vec![Cell::estimate(s.phi, s.phi_p)];
        est.extend(s.coefficients.iter().zip(&s.p_values).map(|(&c, &p)| Cell::estimate(c, p)));
        let mut ratio = vec![Cell::Ratio { value: s.phi_z }];
        ratio.extend(s.z_stats.iter().map(|&z| Cell::Ratio { value: z }));
        rows.push(Row::new(&s.entity, est));
        rows.push(Row::new("", ratio));
    }
    let order = format!(
        "ARDL({}, {})",
        fit.order.p,
        fit.order.q.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(", ")
    );
    Section {
        stage: Stage::Pmg,
        title: format!("Pooled mean group estimation, {order}"),
        tables: vec![
            long_run,
            Table {
                title: "Short-run coefficients (z in parentheses)".into(),
                columns,
                rows,
            },
        ],
        samples: vec![
            ("Panels".into(), fit.short_run.len()),
            ("Observations per panel".into(), fit.n_obs_per_entity),
            ("Iterations".into(), fit.iterations),
        ],
        warnings: fit.warnings.clone(),
    }
}

fn fe_section(reports: &[FeEcmReport]) -> Section {
    let columns: Vec<String> = (1..=reports.len()).map(|j| format!("({j})")).collect();
    let mut rows = vec![Row::new(
        "",
        reports.iter().map(|r| Cell::Text { text: r.dependent.clone() }).collect(),
    )];
    if let Some(first) = reports.first() {
        for (j, name) in first.columns.iter().enumerate() {
            rows.push(Row::new(
                name,
                reports.iter().map(|r| Cell::estimate(r.coefficients[j], r.p_values[j])).collect(),
            ));
            rows.push(Row::new("", reports.iter().map(|r| Cell::Ratio { value: r.z_stats[j] }).collect()));
        }
    }
    let yes_no = |b: bool| Cell::Text { text: if b { "Yes" } else { "No" }.into() };
    rows.push(Row::new("Entity fixed-effect", reports.iter().map(|r| yes_no(r.entity_fe)).collect()));
    rows.push(Row::new("Time fixed-effect", reports.iter().map(|r| yes_no(r.time_fe)).collect()));
    rows.push(Row::new(
        "Std. errors",
        reports
            .iter()
            .map(|r| Cell::Text {
                text: match r.covariance {
                    Covariance::Conventional => "conventional",
                    Covariance::ClusterEntity => "cluster-entity",
                }
                .into(),
            })
            .collect(),
    ));
    rows.push(Row::new("N", reports.iter().map(|r| Cell::Count { value: r.n_obs }).collect()));
    rows.push(Row::new("R-sq within", reports.iter().map(|r| Cell::Number { value: r.r2_within }).collect()));
    Section {
        stage: Stage::FeEcm,
        title: "Fixed-effect error-correction regression (z in parentheses)".into(),
        tables: vec![Table { title: String::new(), columns, rows }],
        samples: reports
            .first()
            .map(|r| vec![("Observations".into(), r.n_obs), ("Panels".into(), r.n_entities)])
            .unwrap_or_default(),
        warnings: Vec::new(),
    }
}

impl ReportBundle {
    /// Display sections of the stages present, in pipeline order.
    pub fn sections(&self) -> Vec<Section> {
        let mut out = Vec::new();
        if let Some(d) = &self.descriptive {
            out.push(descriptive_section(d));
        }
        if let Some(r) = &self.kao {
            out.push(kao_section(r));
        }
        if let Some(r) = &self.pedroni {
            out.push(pedroni_section(r));
        }
        if let Some(r) = &self.causality {
            out.push(causality_section(r));
        }
        if let Some(f) = &self.fmols {
            out.push(fmols_section(f));
        }
        if let Some(f) = &self.pmg {
            out.push(pmg_section(f));
        }
        if let Some(r) = &self.fe_ecm {
            out.push(fe_section(r));
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for s in self.sections() {
            out.push_str(&s.render());
            out.push('\n');
        }
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "stage `{}` failed: {}\n", f.stage, f.message);
        }
        out.push_str(STAR_NOTE);
        out.push('\n');
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Machine-readable per-stage document.
#[derive(Debug, Clone, Serialize)]
pub struct StageDocument<'a> {
    pub section: &'a Section,
    pub star_note: &'static str,
}

/// Write `bundle.json`, `report.txt` and one `<stage>.json` per section
/// into `dir`, creating it if needed.
pub fn write_bundle(bundle: &ReportBundle, dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let write = |name: &str, text: &str| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(p, e))
    };
    write("bundle.json", &bundle.to_json())?;
    write("report.txt", &bundle.render_text())?;
    for s in bundle.sections() {
        let doc = StageDocument { section: &s, star_note: STAR_NOTE };
        write(&format!("{}.json", s.stage), &serde_json::to_string_pretty(&doc).expect("section serializes"))?;
    }
    Ok(())
}
