//! Synthetic heavy-tailed samples and brute-force oracles.
//!
//! Everything here is seeded and bit-reproducible, so estimator and
//! optimizer checks can pin exact expectations. Generated loss matrices can
//! be turned into price panels in the standard CSV schema, which lets the
//! whole pipeline run end to end on controlled data.

use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, dot, matvec};
use crate::market_data::PricePanel;
use crate::rng::SplitMix64;
use crate::tail::{descending_radius_order, polar_decompose, tail_fraction_size, TailEstimate, TailRule};
use crate::weights::Weights;

/// Distribution families available for synthetic loss vectors.
#[derive(Clone, Debug)]
pub enum SyntheticDistribution {
    /// Multivariate Student t: Gaussian with the given scale matrix divided
    /// by an independent chi-square scaling with `dof` degrees of freedom.
    /// Tail index equals `dof`.
    MultivariateT { dof: f64, scale: Vec<Vec<f64>> },
    /// Pareto-distributed radius with a direction drawn uniformly from the
    /// L1 sphere (flat over the simplex of magnitudes, independent signs).
    /// Tail index equals `alpha`.
    ParetoRadialUniformAngle { alpha: f64, dim: usize },
    /// Nonnegative spectral sample that is exactly invariant under cyclic
    /// coordinate rotation: random base angles plus all their rotations.
    /// `n` must be a multiple of `dim`.
    ExchangeableSpectral { dim: usize },
}

/// A reproducible synthetic sample request.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub distribution: SyntheticDistribution,
    pub n: usize,
    pub seed: u64,
}

/// Draws the requested loss matrix (`n` rows). Deterministic per seed.
pub fn sample(spec: &SyntheticSpec) -> Result<Vec<Vec<f64>>> {
    if spec.n == 0 {
        return Err(Error::InvalidSpec("sample count must be positive".into()));
    }
    let mut rng = SplitMix64::new(spec.seed);
    match &spec.distribution {
        SyntheticDistribution::MultivariateT { dof, scale } => {
            if !(*dof > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "degrees of freedom {dof} must be positive"
                )));
            }
            let dim = scale.len();
            if dim == 0 {
                return Err(Error::InvalidSpec("scale matrix is empty".into()));
            }
            let chol = cholesky(scale)
                .map_err(|e| Error::InvalidSpec(format!("scale matrix: {e}")))?;
            let rows = (0..spec.n)
                .map(|_| {
                    let z: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                    let y = matvec(&chol, &z);
                    let s = (rng.chi_square(*dof) / dof).sqrt();
                    y.iter().map(|v| v / s).collect()
                })
                .collect();
            Ok(rows)
        }
        SyntheticDistribution::ParetoRadialUniformAngle { alpha, dim } => {
            if !(*alpha > 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "tail index {alpha} must be positive"
                )));
            }
            if *dim == 0 {
                return Err(Error::InvalidSpec("dimension must be positive".into()));
            }
            let rows = (0..spec.n)
                .map(|_| {
                    let radius = rng.uniform().powf(-1.0 / alpha);
                    let magnitudes = rng.simplex_uniform(*dim);
                    magnitudes
                        .iter()
                        .map(|m| radius * m * rng.sign())
                        .collect()
                })
                .collect();
            Ok(rows)
        }
        SyntheticDistribution::ExchangeableSpectral { dim } => {
            if *dim == 0 {
                return Err(Error::InvalidSpec("dimension must be positive".into()));
            }
            if spec.n % dim != 0 {
                return Err(Error::InvalidSpec(format!(
                    "sample count {} must be a multiple of the dimension {dim}",
                    spec.n
                )));
            }
            let mut rows = Vec::with_capacity(spec.n);
            for _ in 0..spec.n / dim {
                let base = rng.simplex_uniform(*dim);
                for shift in 0..*dim {
                    rows.push((0..*dim).map(|i| base[(i + shift) % dim]).collect());
                }
            }
            Ok(rows)
        }
    }
}

/// Builds a spectral-sample tail estimate directly from generated angles,
/// with a prescribed tail index.
pub fn tail_from_angles(alpha: f64, angles: Vec<Vec<f64>>) -> TailEstimate {
    let k = angles.len();
    TailEstimate {
        alpha_hat: alpha,
        k,
        spectral_sample: angles,
        window_len: k + 1,
    }
}

/// Turns a loss matrix into a price panel: each asset starts at
/// `start_price` and compounds `exp(-vol * loss)` per period. Dates are
/// consecutive calendar days from `start_date`.
pub fn losses_to_panel(
    loss_rows: &[Vec<f64>],
    tickers: &[String],
    start_date: NaiveDate,
    start_price: f64,
    vol: f64,
) -> Result<PricePanel> {
    if loss_rows.is_empty() {
        return Err(Error::EmptyInput("no loss rows".into()));
    }
    if !(start_price > 0.0) || !(vol > 0.0) {
        return Err(Error::InvalidParameter(
            "start price and vol must be positive".into(),
        ));
    }
    let dim = tickers.len();
    let mut dates = Vec::with_capacity(loss_rows.len() + 1);
    let mut date = start_date;
    dates.push(date);
    let mut prices = vec![vec![start_price; dim]];
    for row in loss_rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                left: row.len(),
                right: dim,
            });
        }
        date = date
            .checked_add_days(Days::new(1))
            .ok_or_else(|| Error::InvalidParameter("date overflow".into()))?;
        dates.push(date);
        let prev = prices.last().expect("seeded with the start row");
        let next: Vec<f64> = prev
            .iter()
            .zip(row)
            .map(|(p, x)| p * (-vol * x).exp())
            .collect();
        prices.push(next);
    }
    PricePanel::new(dates, tickers.to_vec(), prices)
}

/// Exhaustive extreme-risk-index minimization over the simplex lattice with
/// the given step. Guarded to four assets; the lattice explodes beyond that.
pub fn brute_force_eri_min(
    tail: &TailEstimate,
    tickers: &[String],
    grid_step: f64,
) -> Result<(Weights, f64)> {
    let n = tickers.len();
    if n == 0 {
        return Err(Error::InvalidWeights("no tickers".into()));
    }
    if n > 4 {
        return Err(Error::DimensionTooLarge { max: 4, got: n });
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step {grid_step} outside (0, 1]"
        )));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let mut best_value = f64::INFINITY;
    let mut best_point = vec![0.0; n];
    let mut counts = vec![0usize; n];
    enumerate_compositions(steps, n, 0, &mut counts, &mut |counts| {
        let point: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
        let value = crate::eri::eri_value_raw(&point, tail).expect("dimensions fixed");
        if value < best_value {
            best_value = value;
            best_point = point;
        }
    });
    let weights = Weights::new(tickers.to_vec(), best_point)?;
    Ok((weights, best_value))
}

fn enumerate_compositions(
    remaining: usize,
    slots: usize,
    index: usize,
    counts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if index == slots - 1 {
        counts[index] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[index] = c;
        enumerate_compositions(remaining - c, slots, index + 1, counts, visit);
    }
}

/// Empirical vs predicted value-at-risk ratio of two portfolios.
///
/// The empirical ratio divides the sample quantiles of the two portfolio
/// losses at `level`. The predicted ratio is `(gamma_v / gamma_w)^(1/alpha)`
/// with both indices evaluated on the empirical spectral sample selected by
/// `rule`, using the supplied exponent `alpha`.
pub fn check_var_ratio(
    samples: &[Vec<f64>],
    v: &Weights,
    w: &Weights,
    level: f64,
    alpha: f64,
    rule: &TailRule,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = samples[0].len();
    if v.len() != dim || w.len() != dim {
        return Err(Error::DimensionMismatch {
            left: v.len().max(w.len()),
            right: dim,
        });
    }
    let loss_v: Vec<f64> = samples.iter().map(|row| dot(v.values(), row)).collect();
    let loss_w: Vec<f64> = samples.iter().map(|row| dot(w.values(), row)).collect();
    let qv = crate::analytics::var_quantile(&loss_v, level)?;
    let qw = crate::analytics::var_quantile(&loss_w, level)?;
    if qw == 0.0 {
        return Err(Error::InvalidParameter(
            "reference portfolio quantile is zero".into(),
        ));
    }
    let empirical = qv / qw;

    let polar = polar_decompose(samples);
    let order = descending_radius_order(&polar);
    let k = tail_fraction_size(samples.len(), rule)?;
    if order.len() < k + 1 {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: order.len(),
        });
    }
    let angles: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&i| polar[i].angle.clone().expect("positive radius"))
        .collect();
    let tail = tail_from_angles(alpha, angles);
    let gamma_v = crate::eri::eri_value_raw(v.values(), &tail)?;
    let gamma_w = crate::eri::eri_value_raw(w.values(), &tail)?;
    if gamma_w <= 0.0 {
        return Err(Error::InvalidParameter(
            "reference portfolio has zero extreme risk index".into(),
        ));
    }
    let predicted = (gamma_v / gamma_w).powf(1.0 / alpha);
    Ok((empirical, predicted))
}
