//! Long-format CSV input and output.
//!
//! Panel files have the header `entity,period,<var1>,...,<varK>` with
//! periods written `YYYYQ#`. Annual files have the header
//! `entity,year,<var>` and are expanded to quarters by holding each year's
//! value for its four quarters.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use xtpanel::{apply_transform, build_panel, Panel, Period, Record, Role, Transform, VariableSpec};

use crate::error::{CliError, CliResult};

/// Maps a CSV column onto an analysis variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableMapping {
    pub column: String,
    /// Defaults to the column name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "level")]
    pub transform: Transform,
    #[serde(default = "regressor")]
    pub role: Role,
}

fn level() -> Transform {
    Transform::Level
}

fn regressor() -> Role {
    Role::Regressor
}

impl VariableMapping {
    pub fn new(column: &str, transform: Transform) -> Self {
        Self {
            column: column.to_string(),
            name: None,
            transform,
            role: Role::Regressor,
        }
    }

    pub fn spec(&self) -> VariableSpec {
        VariableSpec::new(self.name.clone().unwrap_or_else(|| self.column.clone()), self.transform, self.role)
    }
}

/// Read a panel CSV from disk. With an empty `mapping` every variable column
/// is kept in levels; otherwise only mapped columns are kept, renamed and
/// transformed.
pub fn ingest_csv(path: &Path, mapping: &[VariableMapping]) -> CliResult<Panel> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_panel_csv(file, &path.display().to_string(), mapping)
}

fn parse_error(source: &str, row: usize, column: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: source.to_string(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(false).from_reader(reader)
}

/// As [`ingest_csv`] from any reader; `source` names the input in errors.
/// Row numbers count the header as row 1.
pub fn read_panel_csv<R: Read>(reader: R, source: &str, mapping: &[VariableMapping]) -> CliResult<Panel> {
    let mut rdr = csv_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(source, 1, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || !header[0].eq_ignore_ascii_case("entity") || !header[1].eq_ignore_ascii_case("period") {
        return Err(parse_error(source, 1, header.first().map_or("", |s| s.as_str()), "header must start with `entity,period` followed by at least one variable"));
    }
    let columns = &header[2..];
    let selected: Vec<(usize, VariableSpec)> = if mapping.is_empty() {
        columns
            .iter()
            .enumerate()
            .map(|(j, c)| (j + 2, VariableSpec::new(c.clone(), Transform::Level, Role::Regressor)))
            .collect()
    } else {
        mapping
            .iter()
            .map(|m| {
                columns
                    .iter()
                    .position(|c| *c == m.column)
                    .map(|j| (j + 2, m.spec()))
                    .ok_or_else(|| parse_error(source, 1, &m.column, "mapped column not present in header"))
            })
            .collect::<CliResult<_>>()?
    };

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_error(source, line, "", e.to_string()))?;
        let entity = row.get(0).unwrap_or("");
        if entity.is_empty() {
            return Err(parse_error(source, line, &header[0], "empty entity"));
        }
        let period: Period = row
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e: xtpanel::Error| parse_error(source, line, &header[1], e.to_string()))?;
        for (j, spec) in &selected {
            let cell = row.get(*j).unwrap_or("");
            let value: f64 = cell
                .parse()
                .map_err(|_| parse_error(source, line, &header[*j], format!("cannot parse `{cell}` as a number")))?;
            records.push(Record::new(entity, period, spec.name.clone(), value));
        }
    }
    let mut panel = build_panel(&records)?;
    for (_, spec) in &selected {
        panel = apply_transform(&panel, spec)?;
    }
    Ok(panel)
}

/// Step-hold expansion of annual values onto the quarters `first ..= last`.
pub fn expand_annual(annual: &[(i32, f64)], first: Period, last: Period) -> std::result::Result<Vec<f64>, i32> {
    let by_year: BTreeMap<i32, f64> = annual.iter().copied().collect();
    first
        .range_inclusive(last)
        .into_iter()
        .map(|p| by_year.get(&p.year).copied().ok_or(p.year))
        .collect()
}

/// Read `entity,year,<column>` rows from an annual CSV.
pub fn read_annual_csv<R: Read>(reader: R, source: &str, column: &str) -> CliResult<BTreeMap<String, Vec<(i32, f64)>>> {
    let mut rdr = csv_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_error(source, 1, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 3 || !header[0].eq_ignore_ascii_case("entity") || !header[1].eq_ignore_ascii_case("year") {
        return Err(parse_error(source, 1, header.first().map_or("", |s| s.as_str()), "header must start with `entity,year`"));
    }
    let j = header
        .iter()
        .position(|c| c == column)
        .ok_or_else(|| parse_error(source, 1, column, "column not present in header"))?;
    let mut out: BTreeMap<String, Vec<(i32, f64)>> = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_error(source, line, "", e.to_string()))?;
        let year_cell = row.get(1).unwrap_or("");
        let year: i32 = year_cell
            .parse()
            .map_err(|_| parse_error(source, line, &header[1], format!("cannot parse `{year_cell}` as a year")))?;
        let cell = row.get(j).unwrap_or("");
        let value: f64 = cell
            .parse()
            .map_err(|_| parse_error(source, line, &header[j], format!("cannot parse `{cell}` as a number")))?;
        out.entry(row.get(0).unwrap_or("").to_string()).or_default().push((year, value));
    }
    Ok(out)
}

/// Expand an annual CSV column onto the panel's quarters and add it as
/// variable `name`.
pub fn attach_annual(panel: &Panel, annual: &BTreeMap<String, Vec<(i32, f64)>>, name: &str) -> CliResult<Panel> {
    let first = panel.periods()[0];
    let last = *panel.periods().last().expect("non-empty panel");
    let series = panel
        .entities()
        .iter()
        .map(|e| {
            let values = annual.get(e).map(Vec::as_slice).unwrap_or(&[]);
            expand_annual(values, first, last).map_err(|year| CliError::MissingYear {
                variable: name.to_string(),
                entity: e.clone(),
                year,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(panel.with_variable(name, series)?)
}

/// Write `panel` in the long CSV layout. Values use the shortest
/// representation that round-trips exactly.
pub fn write_panel_csv<W: Write>(panel: &Panel, writer: W) -> std::io::Result<()> {
    write_panel_columns(panel, panel.variables(), writer)
}

/// As [`write_panel_csv`] restricted to `columns`, in that order.
pub fn write_panel_columns<W: Write>(panel: &Panel, columns: &[String], writer: W) -> std::io::Result<()> {
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| panel.variable_index(c).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e)))
        .collect::<std::io::Result<_>>()?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["entity".to_string(), "period".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for (e, entity) in panel.entities().iter().enumerate() {
        for (t, period) in panel.periods().iter().enumerate() {
            let mut row = vec![entity.clone(), period.to_string()];
            row.extend(idx.iter().map(|&v| panel.series_at(e, v)[t].to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()
}

/// Write `entity,year,<variable>` taking each year's first available
/// quarter, the inverse of [`attach_annual`] for step-held series.
pub fn write_annual_csv<W: Write>(panel: &Panel, variable: &str, writer: W) -> std::io::Result<()> {
    let v = panel
        .variable_index(variable)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["entity", "year", variable])?;
    for (e, entity) in panel.entities().iter().enumerate() {
        let series = panel.series_at(e, v);
        let mut last_year = None;
        for (t, period) in panel.periods().iter().enumerate() {
            if last_year != Some(period.year) {
                last_year = Some(period.year);
                w.write_record([entity.clone(), period.year.to_string(), series[t].to_string()])?;
            }
        }
    }
    w.flush()
}
