//! Empirical covariance and the long-only minimum-variance portfolio.

use crate::error::{Error, Result};
use crate::linalg::{dot, matvec};
use crate::simplex::{minimize_on_simplex, SolverOptions};
use crate::weights::Weights;

/// Sample covariance of a window of loss rows, optionally ridge-regularized.
#[derive(Clone, Debug)]
pub struct CovarianceEstimate {
    /// N x N symmetric matrix (positive semidefinite up to rounding).
    pub matrix: Vec<Vec<f64>>,
    pub window_len: usize,
    /// Ridge actually added to the diagonal.
    pub ridge: f64,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }
}

/// Minimum-variance result with solver diagnostics.
#[derive(Clone, Debug)]
pub struct MvSolution {
    pub weights: Weights,
    /// Portfolio variance at the solution.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// Sample covariance (divisor `n - 1`) of the rows, plus `ridge * I`.
pub fn empirical_covariance(loss_rows: &[Vec<f64>], ridge: f64) -> Result<CovarianceEstimate> {
    let n = loss_rows.len();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge {ridge} must be nonnegative"
        )));
    }
    let dim = loss_rows[0].len();
    for row in loss_rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                left: row.len(),
                right: dim,
            });
        }
    }
    let mut means = vec![0.0; dim];
    for row in loss_rows {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut matrix = vec![vec![0.0; dim]; dim];
    for row in loss_rows {
        let centered: Vec<f64> = row.iter().zip(&means).map(|(x, m)| x - m).collect();
        for i in 0..dim {
            let ci = centered[i];
            let out = &mut matrix[i];
            for j in i..dim {
                out[j] += ci * centered[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            matrix[i][j] /= denom;
            if i != j {
                matrix[j][i] = matrix[i][j];
            }
        }
        matrix[i][i] += ridge;
    }
    Ok(CovarianceEstimate {
        matrix,
        window_len: n,
        ridge,
    })
}

/// Minimizes `w' C w` over the simplex.
///
/// Projected gradient descent, then an exact equality-constrained solve on
/// the support of the iterate (kept only when it stays feasible and does
/// not increase the objective). Non-convergence within the iteration budget
/// is reported through the `converged` flag rather than an error.
pub fn minimize_variance(
    cov: &CovarianceEstimate,
    tickers: &[String],
    opts: &SolverOptions,
) -> Result<MvSolution> {
    let n = cov.dim();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if tickers.len() != n {
        return Err(Error::DimensionMismatch {
            left: tickers.len(),
            right: n,
        });
    }
    let objective_of = |x: &[f64]| dot(x, &matvec(&cov.matrix, x));
    let sol = minimize_on_simplex(
        n,
        objective_of,
        |x| matvec(&cov.matrix, x).iter().map(|v| 2.0 * v).collect(),
        opts,
    );
    let mut point = sol.point;
    let mut converged = sol.converged;
    let mut residual = sol.kkt_residual;
    if let Some(polished) = polish_on_support(&cov.matrix, &point) {
        if objective_of(&polished) <= objective_of(&point) + 1e-15 {
            point = polished;
            let g: Vec<f64> = matvec(&cov.matrix, &point).iter().map(|v| 2.0 * v).collect();
            let shifted: Vec<f64> = point.iter().zip(&g).map(|(x, gi)| x - gi).collect();
            let projected = crate::simplex::project_to_simplex(&shifted);
            residual = point
                .iter()
                .zip(&projected)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            converged = converged || residual <= opts.tolerance;
        }
    }
    let point = crate::eri::snap_small_weights(point);
    let objective = objective_of(&point);
    let weights = Weights::new(tickers.to_vec(), point)?;
    Ok(MvSolution {
        weights,
        objective,
        iterations: sol.iterations,
        converged,
        kkt_residual: residual,
    })
}

/// Exact minimizer of `w' C w` under the budget constraint on the support
/// of `point`, from the KKT system `C_S w = lambda 1`. `None` when the
/// restricted system is singular or the solution leaves the simplex.
fn polish_on_support(matrix: &[Vec<f64>], point: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = point
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 1e-10)
        .map(|(i, _)| i)
        .collect();
    if support.is_empty() {
        return None;
    }
    let restricted: Vec<Vec<f64>> = support
        .iter()
        .map(|&i| support.iter().map(|&j| matrix[i][j]).collect())
        .collect();
    let unscaled = crate::linalg::solve(&restricted, &vec![1.0; support.len()])?;
    let total: f64 = unscaled.iter().sum();
    if !(total.abs() > 1e-300) {
        return None;
    }
    let mut polished = vec![0.0; point.len()];
    for (&i, &u) in support.iter().zip(&unscaled) {
        let w = u / total;
        if !(w >= 0.0) || w > 1.0 {
            return None;
        }
        polished[i] = w;
    }
    Some(polished)
}
