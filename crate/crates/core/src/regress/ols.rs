use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Result of an ordinary least-squares fit.
#[derive(Debug, Clone)]
pub struct RegressionFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub dof: usize,
    pub n_obs: usize,
    pub design_columns: Vec<String>,
    /// `(X'X)^{-1}` of the design actually used (intercept included).
    pub xtx_inv: DMatrix<f64>,
}

impl RegressionFit {
    /// `rss / dof`.
    pub fn s2(&self) -> f64 {
        self.rss / self.dof as f64
    }

    /// ML variance estimate `rss / n`.
    pub fn sigma2_ml(&self) -> f64 {
        self.rss / self.n_obs as f64
    }

    /// Conventional covariance `s² (X'X)^{-1}`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.xtx_inv * self.s2()
    }

    /// Homoskedastic Wald statistic for the joint nullity of `indices`.
    pub fn wald(&self, indices: &[usize]) -> Result<f64> {
        let k = indices.len();
        let b = DVector::from_iterator(k, indices.iter().map(|&j| self.coefficients[j]));
        let v = DMatrix::from_fn(k, k, |a, c| self.xtx_inv[(indices[a], indices[c])]) * self.s2();
        let inv = v
            .try_inverse()
            .ok_or(Error::RankDeficient { rank: 0, cols: k })?;
        Ok((b.transpose() * inv * &b)[(0, 0)])
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.design_columns.iter().position(|c| c == name)
    }
}

/// Least squares of `y` on `x`, optionally with a leading intercept column.
///
/// Solved through the singular value decomposition; a design whose smallest
/// singular value falls below `RANK_TOLERANCE` times the largest is
/// rejected as rank deficient.
pub fn ols(y: &[f64], x: &DMatrix<f64>, intercept: bool) -> Result<RegressionFit> {
    let names: Vec<String> = (0..x.ncols()).map(|j| format!("x{j}")).collect();
    ols_named(y, x, &names, intercept)
}

pub fn ols_named(y: &[f64], x: &DMatrix<f64>, names: &[String], intercept: bool) -> Result<RegressionFit> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observations but design has {} rows",
            y.len(),
            x.nrows()
        )));
    }
    if names.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} column names for {} columns",
            names.len(),
            x.ncols()
        )));
    }
    let n = y.len();
    let design = if intercept {
        x.clone().insert_column(0, 1.0)
    } else {
        x.clone()
    };
    let k = design.ncols();
    if k == 0 || n <= k {
        return Err(Error::TooFewObservations { n_obs: n, n_params: k });
    }
    let mut design_columns = Vec::with_capacity(k);
    if intercept {
        design_columns.push("const".to_string());
    }
    design_columns.extend(names.iter().cloned());

    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let cutoff = RANK_TOLERANCE * smax;
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    if rank < k || smax == 0.0 {
        return Err(Error::RankDeficient { rank, cols: k });
    }
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let yv = DVector::from_column_slice(y);
    let uty = u.transpose() * &yv;
    let scaled = DVector::from_fn(k, |i, _| uty[i] / sv[i]);
    let beta = vt.transpose() * scaled;
    let v_over_s2 = DMatrix::from_fn(k, k, |i, j| vt[(j, i)] / (sv[j] * sv[j]));
    let xtx_inv = &v_over_s2 * vt;

    let fitted = &design * &beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - k;
    let s2 = rss / dof as f64;
    let standard_errors: Vec<f64> = (0..k).map(|j| (s2 * xtx_inv[(j, j)]).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t_stats = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(b, s)| b / s)
        .collect();
    Ok(RegressionFit {
        coefficients,
        standard_errors,
        t_stats,
        residuals,
        rss,
        dof,
        n_obs: n,
        design_columns,
        xtx_inv,
    })
}
