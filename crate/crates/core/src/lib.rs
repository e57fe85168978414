//! Panel time-series econometrics for balanced entity × quarter panels.
//!
//! The crate covers residual-based panel cointegration tests (Kao, Pedroni),
//! the Dumitrescu-Hurlin Granger non-causality test for heterogeneous
//! panels, panel FMOLS in pooled and group-mean form, the pooled mean group
//! error-correction estimator, and a two-way fixed-effect error-correction
//! regression with an interaction regressor.

pub mod causality;
pub mod coint;
pub mod error;
pub mod fe_ecm;
pub mod fmols;
pub mod panel;
pub mod pmg;
pub mod regress;
pub mod stats;

pub use error::{Error, Result};
pub use panel::{
    apply_transform, build_panel, lag_diff, real_income, AlignedSeries, Panel, Period, Record, Role, SeriesOp,
    Transform, VariableSpec,
};
