//! Extreme risk index: plug-in evaluation and minimization.
//!
//! For a tail estimate with index `alpha` and spectral sample
//! `Z_1, ..., Z_k`, the plug-in extreme risk index of a portfolio `w` is
//!
//! ```text
//! gamma_w = (1/k) * sum_j max(0, w . Z_j)^alpha
//! ```
//!
//! It measures the relative weight of the portfolio's loss tail; for
//! `alpha > 1` it is convex in `w`, and its minimizer over the simplex is
//! the portfolio least exposed to large joint losses.

use crate::error::{Error, Result};
use crate::simplex::{minimize_on_simplex, SolverOptions};
use crate::tail::TailEstimate;
use crate::weights::Weights;

/// Weights below this are snapped to zero after optimization.
const WEIGHT_SNAP: f64 = 1e-10;

/// Minimizer output: the optimal portfolio and solver diagnostics.
#[derive(Clone, Debug)]
pub struct EriSolution {
    pub weights: Weights,
    /// Extreme risk index achieved at `weights`.
    pub gamma: f64,
    pub iterations: usize,
    /// Gradient-mapping residual fell below the tolerance.
    pub converged: bool,
    /// Convergence certificate: only issued in the convex regime
    /// (`alpha_hat > 1`).
    pub certified: bool,
    pub kkt_residual: f64,
}

fn check_dims(values: &[f64], tail: &TailEstimate) -> Result<()> {
    if tail.spectral_sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if tail.dim() != values.len() {
        return Err(Error::DimensionMismatch {
            left: values.len(),
            right: tail.dim(),
        });
    }
    Ok(())
}

fn value_unchecked(values: &[f64], tail: &TailEstimate) -> f64 {
    let k = tail.spectral_sample.len();
    let alpha = tail.alpha_hat;
    let sum: f64 = tail
        .spectral_sample
        .iter()
        .map(|z| {
            let p = crate::linalg::dot(values, z);
            if p > 0.0 {
                p.powf(alpha)
            } else {
                0.0
            }
        })
        .sum();
    sum / k as f64
}

fn subgradient_unchecked(values: &[f64], tail: &TailEstimate) -> Vec<f64> {
    let n = values.len();
    let k = tail.spectral_sample.len();
    let alpha = tail.alpha_hat;
    let mut grad = vec![0.0; n];
    for z in &tail.spectral_sample {
        let p = crate::linalg::dot(values, z);
        // samples sitting exactly on the kink contribute the zero vector
        if p > 0.0 {
            let factor = alpha * p.powf(alpha - 1.0);
            for (g, zi) in grad.iter_mut().zip(z) {
                *g += factor * zi;
            }
        }
    }
    for g in &mut grad {
        *g /= k as f64;
    }
    grad
}

/// Extreme risk index of a portfolio on the simplex.
pub fn eri_value(weights: &Weights, tail: &TailEstimate) -> Result<f64> {
    eri_value_raw(weights.values(), tail)
}

/// The raw functional on arbitrary nonnegative-sum vectors; positively
/// homogeneous of degree `alpha_hat`.
pub fn eri_value_raw(values: &[f64], tail: &TailEstimate) -> Result<f64> {
    check_dims(values, tail)?;
    Ok(value_unchecked(values, tail))
}

/// Subgradient of the extreme risk index at `weights`.
///
/// Coincides with the gradient wherever no spectral sample is orthogonal to
/// the portfolio. Only defined in the convex regime; for `alpha_hat <= 1`
/// the optimizer still proceeds but no subgradient is exposed.
pub fn eri_subgradient(weights: &Weights, tail: &TailEstimate) -> Result<Vec<f64>> {
    check_dims(weights.values(), tail)?;
    if tail.alpha_hat <= 1.0 {
        return Err(Error::NonconvexRegime(tail.alpha_hat));
    }
    Ok(subgradient_unchecked(weights.values(), tail))
}

/// Minimizes the extreme risk index over the simplex.
///
/// Projected gradient descent from equal weights; the achieved value never
/// exceeds the equal-weight value. Outside the convex regime the run is
/// reported with `certified = false` instead of failing.
pub fn minimize_eri(
    tail: &TailEstimate,
    tickers: &[String],
    opts: &SolverOptions,
) -> Result<EriSolution> {
    let n = tickers.len();
    if n == 0 {
        return Err(Error::InvalidWeights("no tickers".into()));
    }
    check_dims(&vec![0.0; n], tail)?;
    if !(tail.alpha_hat > 0.0) || !tail.alpha_hat.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tail index {} must be positive and finite",
            tail.alpha_hat
        )));
    }
    let sol = minimize_on_simplex(
        n,
        |x| value_unchecked(x, tail),
        |x| subgradient_unchecked(x, tail),
        opts,
    );
    let snapped = snap_small_weights(sol.point);
    let gamma = value_unchecked(&snapped, tail);
    let weights = Weights::new(tickers.to_vec(), snapped)?;
    Ok(EriSolution {
        weights,
        gamma,
        iterations: sol.iterations,
        converged: sol.converged,
        certified: sol.converged && tail.alpha_hat > 1.0,
        kkt_residual: sol.kkt_residual,
    })
}

/// Zeroes weights below the snap threshold and renormalizes; keeps
/// turnover and concentration statistics reproducible.
pub(crate) fn snap_small_weights(mut values: Vec<f64>) -> Vec<f64> {
    for v in &mut values {
        if *v < WEIGHT_SNAP {
            *v = 0.0;
        }
    }
    let total: f64 = values.iter().sum();
    debug_assert!(total > 0.0);
    for v in &mut values {
        *v /= total;
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::weights::auto_tickers;

    fn tail(alpha: f64, spectral: Vec<Vec<f64>>) -> TailEstimate {
        let k = spectral.len();
        TailEstimate {
            alpha_hat: alpha,
            k,
            spectral_sample: spectral,
            window_len: k + 1,
        }
    }

    fn random_tail(rng: &mut SplitMix64, dim: usize, k: usize, alpha: f64) -> TailEstimate {
        let spectral = (0..k)
            .map(|_| {
                let mut z = rng.simplex_uniform(dim);
                for zi in &mut z {
                    if rng.uniform() < 0.3 {
                        *zi = -*zi;
                    }
                }
                z
            })
            .collect();
        tail(alpha, spectral)
    }

    #[test]
    fn value_examples() {
        let t = tail(2.7, vec![vec![1.0]; 3]);
        let w = Weights::new(auto_tickers(1), vec![1.0]).unwrap();
        assert!((eri_value(&w, &t).unwrap() - 1.0).abs() < 1e-15);

        // every sample on the negative side of the portfolio
        let t = tail(2.0, vec![vec![-0.5, 0.5], vec![-1.0, 0.0]]);
        let w = Weights::new(auto_tickers(2), vec![1.0, 0.0]).unwrap();
        assert_eq!(eri_value(&w, &t).unwrap(), 0.0);

        let t = tail(2.0, vec![vec![0.5, -0.5]]);
        let w = Weights::new(auto_tickers(2), vec![1.0, 0.0]).unwrap();
        assert!((eri_value(&w, &t).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn value_dimension_check() {
        let t = tail(2.0, vec![vec![0.5, 0.5]]);
        assert!(eri_value_raw(&[1.0], &t).is_err());
    }

    #[test]
    fn subgradient_examples() {
        let t = tail(2.0, vec![vec![-0.5, 0.5], vec![-1.0, 0.0]]);
        let w = Weights::new(auto_tickers(2), vec![1.0, 0.0]).unwrap();
        assert_eq!(eri_subgradient(&w, &t).unwrap(), vec![0.0, 0.0]);

        let t = tail(2.0, vec![vec![1.0, 0.0]]);
        let w = Weights::new(auto_tickers(2), vec![0.5, 0.5]).unwrap();
        let g = eri_subgradient(&w, &t).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-15);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn subgradient_requires_convex_regime() {
        let t = tail(0.9, vec![vec![1.0, 0.0]]);
        let w = Weights::equal(auto_tickers(2)).unwrap();
        assert!(matches!(
            eri_subgradient(&w, &t),
            Err(Error::NonconvexRegime(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SplitMix64::new(99);
        let mut checked = 0;
        while checked < 100 {
            let alpha = 1.5 + 1.5 * rng.uniform();
            let t = random_tail(&mut rng, 4, 30, alpha);
            let x = rng.simplex_uniform(4);
            // stay away from kinks
            if t
                .spectral_sample
                .iter()
                .any(|z| crate::linalg::dot(&x, z).abs() < 1e-3)
            {
                continue;
            }
            let g = subgradient_unchecked(&x, &t);
            let h = 1e-6;
            for i in 0..4 {
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (value_unchecked(&up, &t) - value_unchecked(&down, &t)) / (2.0 * h);
                let scale = g[i].abs().max(fd.abs()).max(1e-8);
                assert!(
                    (g[i] - fd).abs() / scale < 1e-4,
                    "component {i}: {} vs {}",
                    g[i],
                    fd
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn value_is_positively_homogeneous() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..50 {
            let alpha = 1.2 + 2.0 * rng.uniform();
            let t = random_tail(&mut rng, 3, 20, alpha);
            let x: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
            let base = eri_value_raw(&x, &t).unwrap();
            for c in [0.3, 2.0, 7.5] {
                let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
                let got = eri_value_raw(&scaled, &t).unwrap();
                let expect = c.powf(alpha) * base;
                assert!((got - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn value_is_convex_above_one() {
        let mut rng = SplitMix64::new(21);
        let t = random_tail(&mut rng, 5, 40, 2.3);
        for _ in 0..100 {
            let u = rng.simplex_uniform(5);
            let v = rng.simplex_uniform(5);
            let fu = value_unchecked(&u, &t);
            let fv = value_unchecked(&v, &t);
            for lam in [0.25, 0.5, 0.75] {
                let mix: Vec<f64> = u
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| lam * a + (1.0 - lam) * b)
                    .collect();
                let fm = value_unchecked(&mix, &t);
                assert!(fm <= lam * fu + (1.0 - lam) * fv + 1e-12);
            }
        }
    }

    #[test]
    fn minimize_singleton() {
        let t = tail(2.0, vec![vec![1.0]; 5]);
        let sol = minimize_eri(&t, &auto_tickers(1), &SolverOptions::default()).unwrap();
        assert_eq!(sol.weights.values(), &[1.0]);
        assert!((sol.gamma - 1.0).abs() < 1e-15);
        assert!(sol.converged && sol.certified);
    }

    #[test]
    fn minimize_beats_random_points() {
        let mut rng = SplitMix64::new(41);
        let t = random_tail(&mut rng, 4, 60, 2.5);
        let sol = minimize_eri(&t, &auto_tickers(4), &SolverOptions::default()).unwrap();
        for _ in 0..1000 {
            let x = rng.simplex_uniform(4);
            assert!(sol.gamma <= value_unchecked(&x, &t) + 1e-9);
        }
    }

    #[test]
    fn minimize_is_permutation_equivariant() {
        let mut rng = SplitMix64::new(55);
        let t = random_tail(&mut rng, 3, 40, 2.2);
        let perm = [2usize, 0, 1];
        let permuted = tail(
            t.alpha_hat,
            t.spectral_sample
                .iter()
                .map(|z| perm.iter().map(|&j| z[j]).collect())
                .collect(),
        );
        let opts = SolverOptions {
            tolerance: 1e-10,
            max_iterations: 50_000,
        };
        let a = minimize_eri(&t, &auto_tickers(3), &opts).unwrap();
        let b = minimize_eri(&permuted, &auto_tickers(3), &opts).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            assert!(
                (b.weights.values()[i] - a.weights.values()[j]).abs() < 1e-6,
                "{:?} vs {:?}",
                a.weights.values(),
                b.weights.values()
            );
        }
    }

    #[test]
    fn exchangeable_sample_agrees_with_grid_search() {
        let spec = crate::synthetic::SyntheticSpec {
            distribution: crate::synthetic::SyntheticDistribution::ExchangeableSpectral { dim: 3 },
            n: 60,
            seed: 71,
        };
        let angles = crate::synthetic::sample(&spec).unwrap();
        let t = tail(2.0, angles);
        let tickers = auto_tickers(3);
        let sol = minimize_eri(&t, &tickers, &SolverOptions::default()).unwrap();
        let (_, grid_gamma) =
            crate::synthetic::brute_force_eri_min(&t, &tickers, 0.01).unwrap();
        assert!((sol.gamma - grid_gamma).abs() <= 1e-3);
        for w in sol.weights.values() {
            assert!((w - 1.0 / 3.0).abs() < 1e-3, "weights {:?}", sol.weights.values());
        }
    }

    #[test]
    fn nonconvex_regime_runs_uncertified() {
        let mut rng = SplitMix64::new(61);
        let t = random_tail(&mut rng, 3, 30, 0.8);
        let sol = minimize_eri(&t, &auto_tickers(3), &SolverOptions::default()).unwrap();
        assert!(!sol.certified);
        let equal = value_unchecked(&[1.0 / 3.0; 3], &t);
        assert!(sol.gamma <= equal + 1e-12);
    }
}
