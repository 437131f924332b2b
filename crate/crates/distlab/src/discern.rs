//! Sequential discernibility: when do the decisions of a test sequence
//! stabilize on the truth?
//!
//! With the shrinking radius schedule `delta_n = c0 * n^{-e}`, `e < 1/2`, the
//! Hoeffding exponent `2 n delta_n^2` still diverges, so on separated
//! families the running test `L_n = max_{i<=n} K_{n delta_i}` is eventually
//! always correct. `N` is the last sample size with a wrong decision; its
//! tail and exponential moment `E[e^{tN}]` are estimated by Monte Carlo.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{cumulative, draw_cell, DensityFamily, DyadicSet, GridMeasure};
use crate::partition::{image_coordinates, knd_statistic, mix_seed};

/// Schedule parameters and horizon for one trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscernConfig {
    pub c0: f64,
    pub exponent: f64,
    pub n_max: usize,
}

/// One simulated decision path.
#[derive(Debug, Clone, Serialize)]
pub struct DiscernTrajectory {
    /// Decision at each `n = 1..=n_max` (0 accept, 1 reject).
    pub decisions: Vec<u8>,
    /// Last sample size with a wrong decision; 0 when every decision was right.
    pub stopping_time: usize,
    /// 0 when the truth is a null member, 1 for the alternative.
    pub truth_side: u8,
    /// True when the decision was still wrong at the horizon, so
    /// `stopping_time` is right-censored at `n_max`.
    pub censored: bool,
}

/// `delta_n = c0 * n^{-exponent}` with `exponent` in `(0, 1/2)` so that
/// `n * delta_n^2` diverges.
pub fn delta_schedule(n: usize, c0: f64, exponent: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
    }
    if !(exponent > 0.0 && exponent < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "exponent must lie in (0, 1/2), got {exponent}"
        )));
    }
    Ok(c0 * (n as f64).powf(-exponent))
}

fn member_index(fam: &DensityFamily, truth: &GridMeasure) -> Option<usize> {
    fam.members().iter().position(|m| {
        m.n_cells() == truth.n_cells()
            && m.weights()
                .iter()
                .zip(truth.weights())
                .all(|(&a, &b)| (a - b).abs() <= 1e-15)
    })
}

/// Runs the test sequence on one growing sample (nested: the first `n` points
/// are shared by all decisions up to `n`).
///
/// Because `delta_n` is decreasing and the rejection region grows as the
/// radius shrinks, `max_{i<=n} K_{n delta_i}` equals `K_{n delta_n}`; the
/// decision at `n` is therefore `T_n > 2 delta_n` on the statistic
/// `T_n = min_i max_j |z_j - x_ij|`.
pub fn run_sequence(
    truth: &GridMeasure,
    f0: &DensityFamily,
    f1: &DensityFamily,
    sets: &[DyadicSet],
    config: &DiscernConfig,
    seed: u64,
) -> Result<DiscernTrajectory> {
    if config.n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    delta_schedule(1, config.c0, config.exponent)?;
    let in0 = member_index(f0, truth).is_some();
    let in1 = member_index(f1, truth).is_some();
    let truth_side = match (in0, in1) {
        (true, false) => 0u8,
        (false, true) => 1u8,
        (true, true) => {
            return Err(Error::InvalidParameter(
                "truth belongs to both families; the problem is ill-posed".into(),
            ))
        }
        (false, false) => {
            return Err(Error::InvalidParameter("truth belongs to neither family".into()))
        }
    };
    let centers: Vec<Vec<f64>> = f0
        .members()
        .iter()
        .map(|p| image_coordinates(p, sets))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdf = cumulative(truth);
    let mut counts = vec![0u64; sets.len()];
    let mut decisions = Vec::with_capacity(config.n_max);
    let mut stopping_time = 0usize;
    for n in 1..=config.n_max {
        let cell = draw_cell(&cdf, &mut rng);
        for (j, b) in sets.iter().enumerate() {
            if b.cells().binary_search(&cell).is_ok() {
                counts[j] += 1;
            }
        }
        let z: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        let delta = delta_schedule(n, config.c0, config.exponent)?;
        let decision = u8::from(knd_statistic(&z, &centers) > 2.0 * delta);
        if decision != truth_side {
            stopping_time = n;
        }
        decisions.push(decision);
    }
    let censored = stopping_time == config.n_max;
    Ok(DiscernTrajectory { decisions, stopping_time, truth_side, censored })
}

/// Independent trajectories with per-replica seeds `mix(seed, r)`.
pub fn run_trajectories(
    truth: &GridMeasure,
    f0: &DensityFamily,
    f1: &DensityFamily,
    sets: &[DyadicSet],
    config: &DiscernConfig,
    replicas: usize,
    seed: u64,
) -> Result<Vec<DiscernTrajectory>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| run_sequence(truth, f0, f1, sets, config, mix_seed(seed, &[r])))
        .collect()
}

/// One exponential-moment estimate.
#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Set when the estimate is dominated by the single largest observation,
    /// so it says little about the true moment.
    pub heavy_tail: bool,
}

/// Tail and exponential-moment summary of a batch of trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct StoppingStats {
    pub c_grid: Vec<usize>,
    /// `P(N > C)` per grid point.
    pub tail: Vec<f64>,
    pub moments: Vec<MomentEstimate>,
    /// Least-squares decay rate of `-log P(N > C)` on the positive-tail points.
    pub tail_rate: f64,
    pub censored: usize,
    pub trajectories: usize,
}

/// Empirical tails, exponential moments, and a fitted tail rate.
pub fn stopping_time_stats(
    trajectories: &[DiscernTrajectory],
    c_grid: &[usize],
    t_grid: &[f64],
) -> Result<StoppingStats> {
    if trajectories.len() < 1_000 {
        return Err(Error::InvalidParameter("need at least 1000 trajectories".into()));
    }
    let total = trajectories.len() as f64;
    let ns: Vec<usize> = trajectories.iter().map(|tr| tr.stopping_time).collect();
    let censored = trajectories.iter().filter(|tr| tr.censored).count();

    let tail: Vec<f64> = c_grid
        .iter()
        .map(|&c| ns.iter().filter(|&&n| n > c).count() as f64 / total)
        .collect();

    let mut moments = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let values: Vec<f64> = ns.iter().map(|&n| (t * n as f64).exp()).collect();
        let sum: f64 = values.iter().sum();
        let mean = sum / total;
        let var =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (total - 1.0);
        let max = values.iter().copied().fold(0.0f64, f64::max);
        moments.push(MomentEstimate {
            t,
            estimate: mean,
            stderr: (var / total).sqrt(),
            heavy_tail: max > 0.5 * sum,
        });
    }

    // fit -log tail against C where the tail is strictly positive
    let points: Vec<(f64, f64)> = c_grid
        .iter()
        .zip(&tail)
        .filter(|&(_, &p)| p > 0.0)
        .map(|(&c, &p)| (c as f64, -p.ln()))
        .collect();
    let tail_rate = if points.len() >= 2 {
        let m = points.len() as f64;
        let sx: f64 = points.iter().map(|p| p.0).sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let denom = m * sxx - sx * sx;
        if denom.abs() > 1e-12 {
            ((m * sxy - sx * sy) / denom).max(0.0)
        } else {
            0.0
        }
    } else {
        0.0
    };

    Ok(StoppingStats {
        c_grid: c_grid.to_vec(),
        tail,
        moments,
        tail_rate,
        censored,
        trajectories: trajectories.len(),
    })
}
