use serde::{Deserialize, Serialize};
use xtpanel::stats::{mean, std_dev};
use xtpanel::regress::{adf_test, Deterministic};
use xtpanel::{lag_diff, Panel, Result, SeriesOp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation.
    pub sd: f64,
    pub n_obs: usize,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: mean(values),
            sd: std_dev(values),
            n_obs: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveRow {
    /// `None` for the pooled row.
    pub entity: Option<String>,
    pub n_obs: usize,
    /// One entry per variable, in table order.
    pub summaries: Vec<Summary>,
}

/// Per-entity ADF t statistics (intercept, `aug_lags` lags) of one variable
/// in levels and first differences. A descriptive pretest only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootPretest {
    pub variable: String,
    pub aug_lags: usize,
    pub level: Vec<f64>,
    pub level_mean: f64,
    pub difference: Vec<f64>,
    pub difference_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveTable {
    pub variables: Vec<String>,
    pub entities: Vec<String>,
    /// Pooled row first, then one row per entity.
    pub rows: Vec<DescriptiveRow>,
    pub pretest: Vec<UnitRootPretest>,
}

/// ADF pretest of `variables`; a constant series yields NaN rather than an
/// error.
pub fn unit_root_pretest(panel: &Panel, variables: &[String], aug_lags: usize) -> Result<Vec<UnitRootPretest>> {
    let adf = |s: &[f64]| adf_test(s, aug_lags, Deterministic::Intercept).map_or(f64::NAN, |r| r.statistic);
    variables
        .iter()
        .map(|v| {
            let idx = panel.variable_index(v)?;
            let mut level = Vec::new();
            let mut difference = Vec::new();
            for e in 0..panel.n_entities() {
                let s = panel.series_at(e, idx);
                level.push(adf(s));
                let d = lag_diff(s, SeriesOp::Diff(1))?;
                difference.push(adf(&d));
            }
            Ok(UnitRootPretest {
                variable: v.clone(),
                aug_lags,
                level_mean: mean(&level),
                difference_mean: mean(&difference),
                level,
                difference,
            })
        })
        .collect()
}

pub fn describe(panel: &Panel, variables: &[String], aug_lags: usize) -> Result<DescriptiveTable> {
    let idx: Vec<usize> = variables.iter().map(|v| panel.variable_index(v)).collect::<Result<_>>()?;
    let pooled: Vec<Summary> = idx
        .iter()
        .map(|&v| {
            let all: Vec<f64> = (0..panel.n_entities()).flat_map(|e| panel.series_at(e, v).iter().copied()).collect();
            Summary::of(&all)
        })
        .collect();
    let mut rows = vec![DescriptiveRow {
        entity: None,
        n_obs: panel.rows_per_variable(),
        summaries: pooled,
    }];
    for (e, name) in panel.entities().iter().enumerate() {
        rows.push(DescriptiveRow {
            entity: Some(name.clone()),
            n_obs: panel.n_periods(),
            summaries: idx.iter().map(|&v| Summary::of(panel.series_at(e, v))).collect(),
        });
    }
    Ok(DescriptiveTable {
        variables: variables.to_vec(),
        entities: panel.entities().to_vec(),
        rows,
        pretest: unit_root_pretest(panel, variables, aug_lags)?,
    })
}
