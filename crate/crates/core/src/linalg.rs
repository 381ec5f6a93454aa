//! Small dense linear-algebra helpers used by the estimators.

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(matrix: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = matrix.len();
    for row in matrix {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                left: row.len(),
                right: n,
            });
        }
    }
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = matrix[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not positive definite (pivot {sum} at {i})"
                    )));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Solves a square linear system by Gaussian elimination with partial
/// pivoting. `None` for (numerically) singular systems.
pub fn solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = matrix.len();
    if rhs.len() != n || matrix.iter().any(|row| row.len() != n) {
        return None;
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in row + 1..n {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

pub fn matvec(matrix: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    matrix
        .iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration with a
/// Rayleigh-quotient stopping rule. Deterministic start vector.
pub fn top_eigenvalue(matrix: &[Vec<f64>]) -> f64 {
    let n = matrix.len();
    if n == 0 {
        return 0.0;
    }
    // Uneven positive start; restarted on a basis vector if it lands in the
    // null space.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0).sqrt() * 1e-3).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let mut w = matvec(matrix, &v);
        let norm = l2_norm(&w);
        if norm <= f64::MIN_POSITIVE {
            let j = argmax_diagonal(matrix);
            v = vec![0.0; n];
            v[j] = 1.0;
            w = matvec(matrix, &v);
            if l2_norm(&w) <= f64::MIN_POSITIVE {
                return 0.0; // zero matrix
            }
        }
        let next = dot(&v, &w);
        let mut u = w;
        normalize(&mut u);
        v = u;
        if (next - lambda).abs() <= 1e-13 * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        lambda = next;
    }
    lambda
}

fn argmax_diagonal(matrix: &[Vec<f64>]) -> usize {
    let mut best = 0;
    for i in 1..matrix.len() {
        if matrix[i][i] > matrix[best][best] {
            best = i;
        }
    }
    best
}

fn normalize(v: &mut [f64]) {
    let norm = l2_norm(v);
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}
