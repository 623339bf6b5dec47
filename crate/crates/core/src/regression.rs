//! Least-squares kernels: column standardization, joint OLS residuals via
//! Cholesky-factored normal equations, and the single-column partial
//! regression update used by the fast sorter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DataMatrix;

/// Relative pivot floor for the Cholesky factor of `ZᵀZ`.
pub const PIVOT_FLOOR: f64 = 1e-10;

/// Per-column location and scale used by [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl ColumnStats {
    /// Sample means and standard deviations (denominator `n`).
    pub fn from_data(x: &DataMatrix) -> Result<Self> {
        let n = x.n() as f64;
        let mut means = Vec::with_capacity(x.p());
        let mut sds = Vec::with_capacity(x.p());
        for (k, col) in x.columns().enumerate() {
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            if !(sd > f64::EPSILON * mean.abs().max(1.0)) {
                return Err(Error::ZeroVarianceColumn(k));
            }
            means.push(mean);
            sds.push(sd);
        }
        Ok(ColumnStats { means, sds })
    }

    /// Applies `(x - mean) / sd` column-wise. Used to map test data through
    /// the training transform.
    pub fn apply(&self, x: &DataMatrix) -> Result<DataMatrix> {
        if x.p() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), found: x.p() });
        }
        let mut values = Vec::with_capacity(x.n() * x.p());
        for (k, col) in x.columns().enumerate() {
            let (m, s) = (self.means[k], self.sds[k]);
            values.extend(col.iter().map(|v| (v - m) / s));
        }
        Ok(DataMatrix::from_column_major(x.n(), x.p(), values)?.mark_standardized())
    }
}

/// Centers each column and scales it to unit standard deviation (denominator `n`).
pub fn standardize(x: &DataMatrix) -> Result<DataMatrix> {
    standardize_with_stats(x).map(|(d, _)| d)
}

pub fn standardize_with_stats(x: &DataMatrix) -> Result<(DataMatrix, ColumnStats)> {
    if x.n() < 2 {
        return Err(Error::InvalidParameter("standardization needs n >= 2".into()));
    }
    let stats = ColumnStats::from_data(x)?;
    Ok((stats.apply(x)?, stats))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place lower Cholesky factorization of a dense symmetric `m × m` matrix
/// (row-major). Fails when a pivot drops below `PIVOT_FLOOR * max diagonal`.
fn cholesky(a: &mut [f64], m: usize) -> Result<()> {
    let max_diag = (0..m).map(|i| a[i * m + i]).fold(0.0_f64, f64::max);
    let floor = PIVOT_FLOOR * max_diag;
    for j in 0..m {
        let mut d = a[j * m + j];
        for c in 0..j {
            d -= a[j * m + c] * a[j * m + c];
        }
        if !(d > floor) {
            return Err(Error::RankDeficient { pivot: d.max(0.0).sqrt(), floor });
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut s = a[i * m + j];
            for c in 0..j {
                s -= a[i * m + c] * a[j * m + c];
            }
            a[i * m + j] = s / d;
        }
    }
    Ok(())
}

fn cholesky_solve(l: &[f64], m: usize, b: &mut [f64]) {
    for i in 0..m {
        let mut s = b[i];
        for c in 0..i {
            s -= l[i * m + c] * b[c];
        }
        b[i] = s / l[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = b[i];
        for c in i + 1..m {
            s -= l[c * m + i] * b[c];
        }
        b[i] = s / l[i * m + i];
    }
}

/// Least-squares fit of `y` on the columns `z` without intercept.
///
/// Returns `(residual, beta)`. With no regressors the residual is `y` itself.
pub fn ols_residual(y: &[f64], z: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let m = z.len();
    if m == 0 {
        return Ok((y.to_vec(), Vec::new()));
    }
    if m > n {
        return Err(Error::InvalidParameter(format!("{m} regressors exceed {n} observations")));
    }
    if let Some(c) = z.iter().find(|c| c.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: c.len() });
    }
    let mut gram = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let g = dot(z[i], z[j]);
            gram[i * m + j] = g;
            gram[j * m + i] = g;
        }
    }
    let mut beta: Vec<f64> = z.iter().map(|c| dot(c, y)).collect();
    cholesky(&mut gram, m)?;
    cholesky_solve(&gram, m, &mut beta);
    let mut resid = y.to_vec();
    for (c, b) in z.iter().zip(&beta) {
        for (r, v) in resid.iter_mut().zip(c.iter()) {
            *r -= b * v;
        }
    }
    Ok((resid, beta))
}

/// Outcome of a single [`ResidualState::partial_update`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdateOutcome {
    Applied(f64),
    /// `‖R_a‖²` fell below the degeneracy floor; recorded with coefficient 0.
    Skipped,
    /// The entry was already written earlier.
    AlreadyWritten,
}

/// Projects `target` off `basis` in place, returning the coefficient, or
/// `None` when `basis` is numerically zero.
pub(crate) fn project_out(target: &mut [f64], basis: &[f64]) -> Option<f64> {
    let n = basis.len() as f64;
    let denom = dot(basis, basis);
    if !(denom >= 1e-12 * n) {
        return None;
    }
    let coef = dot(basis, target) / denom;
    for (r, b) in target.iter_mut().zip(basis) {
        *r -= coef * b;
    }
    Some(coef)
}

/// Evolving residual columns `R` together with the sparse record `M` of
/// partial-regression coefficients (unit diagonal, write-once off-diagonal).
#[derive(Debug, Clone)]
pub struct ResidualState {
    n: usize,
    residuals: Vec<Vec<f64>>,
    /// Off-diagonal entries of row `k`, in write order.
    coef_rows: Vec<Vec<(usize, f64)>>,
    update_count: usize,
    skipped_count: usize,
}

impl ResidualState {
    /// Starts from `R = X` and `M = I`.
    pub fn new(x: &DataMatrix) -> Self {
        ResidualState {
            n: x.n(),
            residuals: x.columns().map(<[f64]>::to_vec).collect(),
            coef_rows: vec![Vec::new(); x.p()],
            update_count: 0,
            skipped_count: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.residuals.len()
    }

    pub fn residual(&self, k: usize) -> &[f64] {
        &self.residuals[k]
    }

    pub fn update_count(&self) -> usize {
        self.update_count
    }

    pub fn skipped_count(&self) -> usize {
        self.skipped_count
    }

    /// `M[k][a]`, with the unit diagonal.
    pub fn coefficient(&self, k: usize, a: usize) -> f64 {
        if k == a {
            return 1.0;
        }
        self.coef_rows[k].iter().find(|e| e.0 == a).map_or(0.0, |e| e.1)
    }

    /// Whether `M[k][a]` is part of the support (diagonal, or written before).
    pub fn is_written(&self, k: usize, a: usize) -> bool {
        k == a || self.coef_rows[k].iter().any(|e| e.0 == a)
    }

    /// Columns in the support of row `k`, including `k` itself.
    pub fn support(&self, k: usize) -> Vec<usize> {
        let mut s: Vec<usize> = self.coef_rows[k].iter().map(|e| e.0).collect();
        s.push(k);
        s
    }

    pub(crate) fn coef_row(&self, k: usize) -> &[(usize, f64)] {
        &self.coef_rows[k]
    }

    /// Regresses `R_k` on `R_a`, stores the coefficient in `M[k][a]` and
    /// replaces `R_k` by the residual.
    pub fn partial_update(&mut self, k: usize, a: usize) -> UpdateOutcome {
        assert_ne!(k, a, "partial_update needs distinct columns");
        if self.is_written(k, a) {
            return UpdateOutcome::AlreadyWritten;
        }
        let (target, basis) = if k < a {
            let (lo, hi) = self.residuals.split_at_mut(a);
            (&mut lo[k], &hi[0])
        } else {
            let (lo, hi) = self.residuals.split_at_mut(k);
            (&mut hi[0], &lo[a])
        };
        match project_out(target, basis) {
            Some(c) => {
                self.coef_rows[k].push((a, c));
                self.update_count += 1;
                UpdateOutcome::Applied(c)
            }
            None => {
                self.coef_rows[k].push((a, 0.0));
                self.skipped_count += 1;
                UpdateOutcome::Skipped
            }
        }
    }

    /// Installs a column and coefficient row computed elsewhere (used by the
    /// parallel sorter, which computes updates for distinct targets off-state).
    pub(crate) fn commit(&mut self, k: usize, residual: Vec<f64>, new_coefs: Vec<(usize, f64)>, applied: usize, skipped: usize) {
        self.residuals[k] = residual;
        self.coef_rows[k].extend(new_coefs);
        self.update_count += applied;
        self.skipped_count += skipped;
    }
}
