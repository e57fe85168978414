//! Numeric kernels shared by every test and estimator: least squares,
//! augmented Dickey-Fuller regressions and Bartlett-kernel long-run
//! variances.

mod adf;
mod lrv;
mod ols;

pub use adf::{adf_critical_value, adf_test, AdfResult, Deterministic};
pub use lrv::{long_run_covariance, long_run_variance, Kernel, LrvEstimate, LrvMatrix};
pub use ols::{ols, ols_named, RegressionFit, RANK_TOLERANCE};

/// Bandwidth used wherever the reference tables apply (Newey-West, 3 lags).
pub const DEFAULT_BANDWIDTH: usize = 3;
