//! Projected gradient descent on the unit simplex.
//!
//! Shared by the extreme-risk and minimum-variance optimizers. The method
//! starts at equal weights, takes backtracking (Armijo) steps along the
//! projection arc, and reports the unit-step gradient-mapping norm
//! `||x - P(x - g)||` as the first-order optimality residual.

use serde::{Deserialize, Serialize};

use crate::linalg::dot;

const ARMIJO_SLOPE: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Stopping parameters for the simplex solvers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on the gradient-mapping norm accepted as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 5000,
        }
    }
}

/// Result of a projected gradient run.
#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
}

/// Euclidean projection onto the unit simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    debug_assert!(n > 0);
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimizes `f` over the simplex starting from equal weights.
///
/// `value` and `gradient` must be consistent; for convex `f` the returned
/// point with a small residual is a global minimizer. The objective value
/// never increases along the iterates, so the result is at least as good as
/// the equal-weight start.
pub fn minimize_on_simplex<F, G>(
    n: usize,
    value: F,
    gradient: G,
    opts: &SolverOptions,
) -> SimplexSolution
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    assert!(n > 0, "cannot optimize over an empty simplex");
    let mut x = vec![1.0 / n as f64; n];
    let mut fx = value(&x);
    let mut g = gradient(&x);
    let mut step = 1.0;
    let mut iterations = 0;

    let residual_at = |x: &[f64], g: &[f64]| {
        let shifted: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - gi).collect();
        let projected = project_to_simplex(&shifted);
        x.iter()
            .zip(&projected)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    let mut residual = residual_at(&x, &g);
    while residual > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let mut s = step;
        let mut accepted = None;
        // best plain decrease seen, in case sufficient decrease drowns in
        // floating-point noise near the optimum
        let mut fallback: Option<(Vec<f64>, f64, f64)> = None;
        for _ in 0..MAX_BACKTRACKS {
            let shifted: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - s * gi).collect();
            let candidate = project_to_simplex(&shifted);
            let direction: Vec<f64> = candidate.iter().zip(&x).map(|(c, xi)| c - xi).collect();
            let slope = dot(&g, &direction);
            if slope >= 0.0 {
                // no descent direction left at this step size
                s *= BACKTRACK;
                continue;
            }
            let fc = value(&candidate);
            if fc <= fx + ARMIJO_SLOPE * slope {
                accepted = Some((candidate, fc, s));
                break;
            }
            if fc < fx && fallback.as_ref().is_none_or(|(_, fb, _)| fc < *fb) {
                fallback = Some((candidate.clone(), fc, s));
            }
            s *= BACKTRACK;
        }
        let accepted = accepted.or(fallback);
        match accepted {
            Some((candidate, fc, used)) => {
                x = candidate;
                fx = fc;
                g = gradient(&x);
                step = (used * 2.0).min(1e12);
                residual = residual_at(&x, &g);
            }
            None => break, // line search stalled at numerical floor
        }
    }

    let converged = residual <= opts.tolerance;
    SimplexSolution {
        point: x,
        value: fx,
        iterations,
        converged,
        kkt_residual: residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn is_on_simplex(x: &[f64]) {
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_fixed_points_and_cases() {
        let p = project_to_simplex(&[0.2, 0.3, 0.5]);
        for (a, b) in p.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = project_to_simplex(&[10.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_to_simplex(&[-5.0, -5.0]);
        for v in &p {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..500 {
            let v: Vec<f64> = (0..6).map(|_| 4.0 * rng.normal()).collect();
            let p = project_to_simplex(&v);
            is_on_simplex(&p);
            let q = project_to_simplex(&p);
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_minimizes_distance() {
        // compare against random feasible points
        let mut rng = SplitMix64::new(6);
        for _ in 0..100 {
            let v: Vec<f64> = (0..4).map(|_| 2.0 * rng.normal()).collect();
            let p = project_to_simplex(&v);
            let dp: f64 = p.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            for _ in 0..50 {
                let q = rng.simplex_uniform(4);
                let dq: f64 = q.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                assert!(dp <= dq + 1e-12);
            }
        }
    }

    #[test]
    fn solves_separable_quadratic() {
        // min sum c_i x_i^2 on the simplex has x_i proportional to 1/c_i
        let c = [1.0, 2.0, 4.0];
        let sol = minimize_on_simplex(
            3,
            |x| x.iter().zip(&c).map(|(xi, ci)| ci * xi * xi).sum(),
            |x| x.iter().zip(&c).map(|(xi, ci)| 2.0 * ci * xi).collect(),
            &SolverOptions {
                tolerance: 1e-7,
                max_iterations: 20_000,
            },
        );
        is_on_simplex(&sol.point);
        assert!(sol.converged, "residual {}", sol.kkt_residual);
        let inv: Vec<f64> = c.iter().map(|ci| 1.0 / ci).collect();
        let total: f64 = inv.iter().sum();
        for (x, target) in sol.point.iter().zip(inv.iter().map(|v| v / total)) {
            assert!((x - target).abs() < 1e-7, "{x} vs {target}");
        }
    }

    #[test]
    fn never_worse_than_equal_weights() {
        let mut rng = SplitMix64::new(12);
        for _ in 0..20 {
            let q: Vec<f64> = (0..5).map(|_| rng.uniform() + 0.1).collect();
            let lin: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
            let f = |x: &[f64]| -> f64 {
                x.iter()
                    .zip(&q)
                    .zip(&lin)
                    .map(|((xi, qi), li)| qi * xi * xi + li * xi)
                    .sum()
            };
            let g = |x: &[f64]| -> Vec<f64> {
                x.iter()
                    .zip(&q)
                    .zip(&lin)
                    .map(|((xi, qi), li)| 2.0 * qi * xi + li)
                    .collect()
            };
            let start = vec![0.2; 5];
            let sol = minimize_on_simplex(5, f, g, &SolverOptions::default());
            assert!(sol.value <= f(&start) + 1e-12);
        }
    }
}
