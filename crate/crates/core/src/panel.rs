//! Balanced entity × quarter × variable panels and the deterministic series
//! transforms (log, lag, difference) used by every estimator.
//!
//! A [`Panel`] is immutable once built. Derived variables are added by
//! producing a new panel ([`Panel::with_variable`]), so a panel can be
//! shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar quarter. Ordered by year, then quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Period {
    pub year: i32,
    pub quarter: u8,
}

impl Period {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::PeriodParse(format!("{year}Q{quarter}")));
        }
        Ok(Self { year, quarter })
    }

    pub fn next(self) -> Self {
        if self.quarter == 4 {
            Self {
                year: self.year + 1,
                quarter: 1,
            }
        } else {
            Self {
                year: self.year,
                quarter: self.quarter + 1,
            }
        }
    }

    /// Periods from `self` through `last`, inclusive. Empty when `last < self`.
    pub fn range_inclusive(self, last: Period) -> Vec<Period> {
        let mut out = Vec::new();
        let mut p = self;
        while p <= last {
            out.push(p);
            p = p.next();
        }
        out
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::PeriodParse(s.to_string());
        let t = s.trim();
        let (year, quarter) = t
            .split_once(['Q', 'q'])
            .ok_or_else(bad)?;
        if year.len() != 4 || quarter.len() != 1 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let quarter: u8 = quarter.parse().map_err(|_| bad())?;
        Period::new(year, quarter).map_err(|_| bad())
    }
}

/// One observation in long format.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub entity: String,
    pub period: Period,
    pub variable: String,
    pub value: f64,
}

impl Record {
    pub fn new(entity: impl Into<String>, period: Period, variable: impl Into<String>, value: f64) -> Self {
        Self {
            entity: entity.into(),
            period,
            variable: variable.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Level,
    NaturalLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Dependent,
    Regressor,
    Auxiliary,
}

/// How a raw variable enters the analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub transform: Transform,
    pub role: Role,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, transform: Transform, role: Role) -> Self {
        Self {
            name: name.into(),
            transform,
            role,
        }
    }
}

/// Balanced panel. Values are stored variable-major, then entity, then
/// period, so each (entity, variable) series is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    entities: Vec<String>,
    periods: Vec<Period>,
    variables: Vec<String>,
    values: Vec<f64>,
}

/// Build a panel from long-format records.
///
/// Entities and variables are sorted lexicographically and periods
/// chronologically, so the result does not depend on record order.
pub fn build_panel(records: &[Record]) -> Result<Panel> {
    if records.is_empty() {
        return Err(Error::EmptyPanel);
    }
    let mut cells: BTreeMap<(&str, &str, Period), f64> = BTreeMap::new();
    let mut entities = BTreeSet::new();
    let mut variables = BTreeSet::new();
    let mut periods = BTreeSet::new();
    for r in records {
        if cells
            .insert((r.variable.as_str(), r.entity.as_str(), r.period), r.value)
            .is_some()
        {
            return Err(Error::DuplicateCell {
                entity: r.entity.clone(),
                period: r.period,
                variable: r.variable.clone(),
            });
        }
        if !r.value.is_finite() {
            return Err(Error::NonFiniteValue {
                entity: r.entity.clone(),
                period: r.period,
                variable: r.variable.clone(),
            });
        }
        entities.insert(r.entity.as_str());
        variables.insert(r.variable.as_str());
        periods.insert(r.period);
    }
    let periods: Vec<Period> = periods.into_iter().collect();
    check_consecutive(&periods)?;

    let mut values = Vec::with_capacity(entities.len() * variables.len() * periods.len());
    for &v in &variables {
        for &e in &entities {
            for &p in &periods {
                match cells.get(&(v, e, p)) {
                    Some(&x) => values.push(x),
                    None => {
                        return Err(Error::MissingCell {
                            entity: e.to_string(),
                            period: p,
                            variable: v.to_string(),
                        })
                    }
                }
            }
        }
    }
    Ok(Panel {
        entities: entities.into_iter().map(str::to_string).collect(),
        periods,
        variables: variables.into_iter().map(str::to_string).collect(),
        values,
    })
}

fn check_consecutive(periods: &[Period]) -> Result<()> {
    for w in periods.windows(2) {
        if w[0].next() != w[1] {
            return Err(Error::GapInPeriods {
                before: w[0],
                after: w[1],
            });
        }
    }
    Ok(())
}

impl Panel {
    /// Construct from dense series: `series[v][e]` is the full time series of
    /// variable `v` for entity `e`, covering `start, start.next(), ...`.
    /// Entities are sorted lexicographically; variable order is kept.
    pub fn from_series(
        entities: Vec<String>,
        start: Period,
        variables: Vec<String>,
        series: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if entities.is_empty() || variables.is_empty() {
            return Err(Error::EmptyPanel);
        }
        unique(&entities)?;
        unique(&variables)?;
        if series.len() != variables.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} variables but {} series blocks",
                variables.len(),
                series.len()
            )));
        }
        let n_t = series[0].first().map_or(0, Vec::len);
        if n_t == 0 {
            return Err(Error::EmptyPanel);
        }
        let mut periods = Vec::with_capacity(n_t);
        let mut p = start;
        for _ in 0..n_t {
            periods.push(p);
            p = p.next();
        }
        // Canonical entity order, matching build_panel.
        let mut order: Vec<usize> = (0..entities.len()).collect();
        order.sort_by(|&a, &b| entities[a].cmp(&entities[b]));
        let entities: Vec<String> = order.iter().map(|&i| entities[i].clone()).collect();
        let mut values = Vec::with_capacity(variables.len() * entities.len() * n_t);
        for (v, block) in variables.iter().zip(&series) {
            if block.len() != entities.len() {
                return Err(Error::DimensionMismatch(format!(
                    "variable `{v}` has {} entity series, expected {}",
                    block.len(),
                    entities.len()
                )));
            }
            for (e, &i) in entities.iter().zip(&order) {
                let s = &block[i];
                if s.len() != n_t {
                    return Err(Error::MissingCell {
                        entity: e.clone(),
                        period: *periods.get(s.len()).unwrap_or(&periods[0]),
                        variable: v.clone(),
                    });
                }
                if let Some(t) = s.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFiniteValue {
                        entity: e.clone(),
                        period: periods[t],
                        variable: v.clone(),
                    });
                }
                values.extend_from_slice(s);
            }
        }
        Ok(Self {
            entities,
            periods,
            variables,
            values,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    /// Number of cells per variable (entities × periods).
    pub fn rows_per_variable(&self) -> usize {
        self.n_entities() * self.n_periods()
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v == name)
    }

    fn offset(&self, var: usize, entity: usize) -> usize {
        (var * self.n_entities() + entity) * self.n_periods()
    }

    /// Time series of `variable` for the entity at position `entity`.
    pub fn series(&self, entity: usize, variable: &str) -> Result<&[f64]> {
        let v = self.variable_index(variable)?;
        Ok(self.series_at(entity, v))
    }

    pub fn series_at(&self, entity: usize, var: usize) -> &[f64] {
        let o = self.offset(var, entity);
        &self.values[o..o + self.n_periods()]
    }

    pub fn value(&self, entity: usize, period: usize, variable: &str) -> Result<f64> {
        Ok(self.series(entity, variable)?[period])
    }

    /// Returns a panel with an extra variable. `series[e]` is entity `e`'s
    /// time series.
    pub fn with_variable(&self, name: &str, series: Vec<Vec<f64>>) -> Result<Panel> {
        if self.has_variable(name) {
            return Err(Error::DuplicateVariable(name.to_string()));
        }
        let mut out = self.clone();
        out.variables.push(name.to_string());
        out.push_block(name, series)?;
        Ok(out)
    }

    /// Returns a panel where `name` is replaced by `series`.
    pub fn replace_variable(&self, name: &str, series: Vec<Vec<f64>>) -> Result<Panel> {
        let v = self.variable_index(name)?;
        check_block(self, name, &series)?;
        let mut out = self.clone();
        for (e, s) in series.into_iter().enumerate() {
            let o = out.offset(v, e);
            out.values[o..o + self.n_periods()].copy_from_slice(&s);
        }
        Ok(out)
    }

    fn push_block(&mut self, name: &str, series: Vec<Vec<f64>>) -> Result<()> {
        check_block(self, name, &series)?;
        for s in series {
            self.values.extend(s);
        }
        Ok(())
    }

    /// Keep only the listed entities, in panel order.
    pub fn select_entities(&self, keep: &[usize]) -> Result<Panel> {
        if keep.is_empty() {
            return Err(Error::EmptyPanel);
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let entities: Vec<String> = keep.iter().map(|&e| self.entities[e].clone()).collect();
        let series = (0..self.variables.len())
            .map(|v| keep.iter().map(|&e| self.series_at(e, v).to_vec()).collect())
            .collect();
        Panel::from_series(entities, self.periods[0], self.variables.clone(), series)
    }

    /// Long-format records, in panel order.
    pub fn records(&self) -> Vec<Record> {
        let mut out = Vec::with_capacity(self.values.len());
        for (v, var) in self.variables.iter().enumerate() {
            for (e, ent) in self.entities.iter().enumerate() {
                for (t, &p) in self.periods.iter().enumerate() {
                    out.push(Record::new(ent.clone(), p, var.clone(), self.series_at(e, v)[t]));
                }
            }
        }
        out
    }
}

fn check_block(panel: &Panel, name: &str, series: &[Vec<f64>]) -> Result<()> {
    if series.len() != panel.n_entities() {
        return Err(Error::DimensionMismatch(format!(
            "variable `{name}`: {} entity series for {} entities",
            series.len(),
            panel.n_entities()
        )));
    }
    for (e, s) in series.iter().enumerate() {
        if s.len() != panel.n_periods() {
            return Err(Error::DimensionMismatch(format!(
                "variable `{name}`, entity `{}`: {} values for {} periods",
                panel.entities[e],
                s.len(),
                panel.n_periods()
            )));
        }
        if let Some(t) = s.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue {
                entity: panel.entities[e].clone(),
                period: panel.periods[t],
                variable: name.to_string(),
            });
        }
    }
    Ok(())
}

fn unique(names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::DuplicateVariable(n.clone()));
        }
    }
    Ok(())
}

/// Apply a level or natural-log transform to one variable.
pub fn apply_transform(panel: &Panel, spec: &VariableSpec) -> Result<Panel> {
    let v = panel.variable_index(&spec.name)?;
    match spec.transform {
        Transform::Level => Ok(panel.clone()),
        Transform::NaturalLog => {
            let mut series = Vec::with_capacity(panel.n_entities());
            for e in 0..panel.n_entities() {
                let s = panel.series_at(e, v);
                if let Some(&bad) = s.iter().find(|&&x| x <= 0.0) {
                    return Err(Error::NonPositiveForLog {
                        variable: spec.name.clone(),
                        entity: panel.entities[e].clone(),
                        value: bad,
                    });
                }
                series.push(s.iter().map(|x| x.ln()).collect());
            }
            panel.replace_variable(&spec.name, series)
        }
    }
}

/// Real income as `ln(nominal_gdp / cpi × 100)`, added as variable `name`.
pub fn real_income(panel: &Panel, gdp: &str, cpi: &str, name: &str) -> Result<Panel> {
    let g = panel.variable_index(gdp)?;
    let c = panel.variable_index(cpi)?;
    let mut series = Vec::with_capacity(panel.n_entities());
    for e in 0..panel.n_entities() {
        let mut s = Vec::with_capacity(panel.n_periods());
        for (&y, &p) in panel.series_at(e, g).iter().zip(panel.series_at(e, c)) {
            let ratio = y / p * 100.0;
            if !(ratio > 0.0) {
                return Err(Error::NonPositiveForLog {
                    variable: name.to_string(),
                    entity: panel.entities[e].clone(),
                    value: ratio,
                });
            }
            s.push(ratio.ln());
        }
        series.push(s);
    }
    panel.with_variable(name, series)
}

/// A lag or difference operator of order `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesOp {
    /// `x_{t-k}`.
    Lag(usize),
    /// k-fold first difference.
    Diff(usize),
}

impl SeriesOp {
    fn order(self) -> usize {
        match self {
            SeriesOp::Lag(k) | SeriesOp::Diff(k) => k,
        }
    }
}

/// Apply a lag or difference. The output is aligned to the surviving time
/// index `k..n`, so it is exactly `k` shorter than the input.
pub fn lag_diff(series: &[f64], op: SeriesOp) -> Result<Vec<f64>> {
    let k = op.order();
    if k == 0 {
        return Err(Error::InvalidParameters("lag/diff order must be at least 1".into()));
    }
    if series.len() <= k {
        return Err(Error::SequenceTooShort {
            needed: k,
            got: series.len(),
        });
    }
    Ok(match op {
        SeriesOp::Lag(k) => series[..series.len() - k].to_vec(),
        SeriesOp::Diff(k) => {
            let mut out = series.to_vec();
            for _ in 0..k {
                out = out.windows(2).map(|w| w[1] - w[0]).collect();
            }
            out
        }
    })
}

/// A derived series that remembers how many leading observations were
/// consumed, so chained lags and differences stay aligned to the original
/// time index.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    /// Index of the first surviving observation in the original series.
    pub start: usize,
    pub values: Vec<f64>,
}

impl AlignedSeries {
    pub fn new(values: Vec<f64>) -> Self {
        Self { start: 0, values }
    }

    pub fn apply(&self, op: SeriesOp) -> Result<Self> {
        Ok(Self {
            start: self.start + op.order(),
            values: lag_diff(&self.values, op)?,
        })
    }

    pub fn lag(&self, k: usize) -> Result<Self> {
        self.apply(SeriesOp::Lag(k))
    }

    pub fn diff(&self, k: usize) -> Result<Self> {
        self.apply(SeriesOp::Diff(k))
    }

    /// Values for original time indices `from..`.
    pub fn from_index(&self, from: usize) -> &[f64] {
        &self.values[from - self.start..]
    }

    pub fn consumed(&self) -> usize {
        self.start
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(s: &str) -> Period {
        s.parse().unwrap()
    }

    fn complete(n_ent: usize, n_per: usize, vars: &[&str]) -> Vec<Record> {
        let periods = q("2009Q1").range_inclusive(q("2100Q4"));
        let mut out = Vec::new();
        for e in 0..n_ent {
            for t in 0..n_per {
                for (j, v) in vars.iter().enumerate() {
                    out.push(Record::new(
                        format!("E{e}"),
                        periods[t],
                        *v,
                        1.0 + (e * 100 + t * 10 + j) as f64,
                    ));
                }
            }
        }
        out
    }

    #[test]
    fn period_parsing() {
        assert_eq!(q("2009Q1"), Period { year: 2009, quarter: 1 });
        assert!("2009Q5".parse::<Period>().is_err());
        assert!("2009Q0".parse::<Period>().is_err());
        assert!("09Q1".parse::<Period>().is_err());
        assert!("2009-1".parse::<Period>().is_err());
        assert_eq!(q("2009Q4").next(), q("2010Q1"));
        assert_eq!(q("2019Q1").to_string(), "2019Q1");
        assert_eq!(q("2009Q1").range_inclusive(q("2019Q1")).len(), 41);
    }

    #[test]
    fn paper_shaped_panel_has_246_rows() {
        let vars = ["HP", "FLOW", "INCOME", "INTEREST", "EXRATE", "STOCKPRICE"];
        let p = build_panel(&complete(6, 41, &vars)).unwrap();
        assert_eq!(p.rows_per_variable(), 246);
        assert_eq!(p.variables().len(), 6);
    }

    #[test]
    fn minimal_panel() {
        let p = build_panel(&complete(1, 2, &["x"])).unwrap();
        assert_eq!(p.values.len(), 2);
    }

    #[test]
    fn missing_cell_rejected() {
        let mut recs = complete(2, 8, &["x"]);
        recs.retain(|r| !(r.entity == "E1" && r.period == q("2010Q3")));
        match build_panel(&recs) {
            Err(Error::MissingCell { entity, period, .. }) => {
                assert_eq!(entity, "E1");
                assert_eq!(period, q("2010Q3"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_cell_and_gap_rejected() {
        let mut recs = complete(1, 3, &["x"]);
        recs.push(recs[0].clone());
        assert!(matches!(build_panel(&recs), Err(Error::DuplicateCell { .. })));

        let mut recs = complete(1, 4, &["x"]);
        recs.retain(|r| r.period != q("2009Q2"));
        assert!(matches!(build_panel(&recs), Err(Error::GapInPeriods { .. })));
    }

    #[test]
    fn log_transform() {
        let recs: Vec<Record> = (0..4)
            .map(|t| Record::new("A", q("2009Q1").range_inclusive(q("2009Q4"))[t], "v", std::f64::consts::E))
            .collect();
        let p = build_panel(&recs).unwrap();
        let spec = VariableSpec::new("v", Transform::NaturalLog, Role::Dependent);
        let out = apply_transform(&p, &spec).unwrap();
        for &x in out.series(0, "v").unwrap() {
            assert!((x - 1.0).abs() < 1e-15);
        }
        let lvl = VariableSpec::new("v", Transform::Level, Role::Dependent);
        assert_eq!(apply_transform(&p, &lvl).unwrap(), p);

        let mut recs = recs;
        recs[2].value = 0.0;
        let p = build_panel(&recs).unwrap();
        assert!(matches!(apply_transform(&p, &spec), Err(Error::NonPositiveForLog { .. })));
    }

    #[test]
    fn real_income_formula() {
        let periods = q("2009Q1").range_inclusive(q("2009Q2"));
        let recs = vec![
            Record::new("A", periods[0], "GDP", 500.0),
            Record::new("A", periods[1], "GDP", 600.0),
            Record::new("A", periods[0], "CPI", 100.0),
            Record::new("A", periods[1], "CPI", 120.0),
        ];
        let p = real_income(&build_panel(&recs).unwrap(), "GDP", "CPI", "INCOME").unwrap();
        let s = p.series(0, "INCOME").unwrap();
        assert!((s[0] - 500f64.ln()).abs() < 1e-12);
        assert!((s[1] - 500f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn lag_and_diff_examples() {
        assert_eq!(lag_diff(&[5.0, 5.0, 5.0, 5.0], SeriesOp::Diff(1)).unwrap(), vec![0.0; 3]);
        assert_eq!(lag_diff(&[1.0, 2.0, 3.0], SeriesOp::Lag(1)).unwrap(), vec![1.0, 2.0]);
        assert_eq!(lag_diff(&[1.0, 3.0, 6.0, 10.0], SeriesOp::Diff(1)).unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(lag_diff(&[1.0, 3.0, 6.0, 10.0], SeriesOp::Diff(2)).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(
            lag_diff(&[1.0], SeriesOp::Diff(1)),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn aligned_chains_track_consumption() {
        // D(X(-2)): difference of the second lag.
        let x = AlignedSeries::new(vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        let d = x.diff(1).unwrap();
        assert_eq!(d.consumed(), 1);
        let ld = d.lag(2).unwrap();
        assert_eq!(ld.consumed(), 3);
        assert_eq!(ld.values, vec![1.0, 2.0]);
        // at t = 3 the value is x_1 - x_0.
        assert_eq!(ld.from_index(3)[0], 1.0);
        assert_eq!(d.from_index(3), &[4.0, 8.0]);
    }

    proptest! {
        #[test]
        fn log_round_trip(vals in proptest::collection::vec(-5.0f64..5.0, 2..30)) {
            let periods = q("2000Q1").range_inclusive(q("2099Q4"));
            let recs: Vec<Record> = vals.iter().enumerate()
                .map(|(t, v)| Record::new("A", periods[t], "v", v.exp()))
                .collect();
            let p = build_panel(&recs).unwrap();
            let spec = VariableSpec::new("v", Transform::NaturalLog, Role::Regressor);
            let out = apply_transform(&p, &spec).unwrap();
            for (a, b) in out.series(0, "v").unwrap().iter().zip(&vals) {
                prop_assert!((a.exp() - b.exp()).abs() <= 1e-12 * b.exp().max(1.0));
            }
        }

        #[test]
        fn diff_then_cumsum_recovers(vals in proptest::collection::vec(-100.0f64..100.0, 2..50)) {
            let d = lag_diff(&vals, SeriesOp::Diff(1)).unwrap();
            let mut acc = vals[0];
            for (i, dv) in d.iter().enumerate() {
                acc += dv;
                prop_assert!((acc - vals[i + 1]).abs() < 1e-12 * (1.0 + vals[i + 1].abs()) * 10.0);
            }
        }

        #[test]
        fn build_is_order_insensitive(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let recs = complete(3, 5, &["a", "b"]);
            let mut shuffled = recs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(build_panel(&recs).unwrap(), build_panel(&shuffled).unwrap());
        }
    }
}
