//! Poisson point-process testing on the grid.
//!
//! A model is a mean measure `mu` on `[0,1)`; pooling `n` realizations gives
//! independent per-cell counts `Poisson(n * mu(cell))`. The reference process
//! has intensity identically 1 (the uniform probability measure), and the
//! likelihood ratio of intensity `lambda` against it is
//!
//! `log dP_lambda/dP_ref = -n (mass(lambda) - 1) + sum_c counts_c * log density_c`,
//!
//! with the product moment identity
//! `E_ref[ dP_{l1}/dP_ref * dP_{l2}/dP_ref ] = exp{ n <l1 - 1, l2 - 1> }`
//! exact for cell-constant intensities.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{measure_of_set, sine_density, DensityFamily, GridMeasure};
use crate::partition::{knd_statistic, mix_seed, fit_exponential_rate, PartitionTestSpec, TestReport};

/// A Poisson process with a fixed mean measure (intensity relative to the
/// uniform reference of mass 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoissonModel {
    intensity: GridMeasure,
}

impl PoissonModel {
    pub fn new(intensity: GridMeasure) -> Self {
        Self { intensity }
    }

    pub fn intensity(&self) -> &GridMeasure {
        &self.intensity
    }
}

/// Per-cell counts of `n` pooled realizations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointPattern {
    pub counts: Vec<u64>,
    pub n: usize,
}

impl PointPattern {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    }
}

/// `n` pooled realizations: independent `counts[c] ~ Poisson(n * mu(cell c))`.
pub fn sample_process(model: &PoissonModel, n: usize, seed: u64) -> Result<PointPattern> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_pattern(model.intensity(), n, &mut rng))
}

fn sample_pattern(intensity: &GridMeasure, n: usize, rng: &mut ChaCha8Rng) -> PointPattern {
    let counts = intensity
        .weights()
        .iter()
        .map(|&w| poisson_draw(rng, n as f64 * w))
        .collect();
    PointPattern { counts, n }
}

/// Log likelihood ratio of intensity `lambda` against the unit reference.
/// A zero intensity at an occupied cell yields `-inf` (a value, not an error).
pub fn log_likelihood_ratio(pattern: &PointPattern, lambda: &GridMeasure) -> Result<f64> {
    if pattern.counts.len() != lambda.n_cells() {
        return Err(Error::GridMismatch(pattern.counts.len(), lambda.n_cells()));
    }
    let mut llr = -(pattern.n as f64) * (lambda.mass() - 1.0);
    for (c, &count) in pattern.counts.iter().enumerate() {
        if count > 0 {
            let d = lambda.density(c);
            if d <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            llr += count as f64 * d.ln();
        }
    }
    Ok(llr)
}

/// Closed form `exp{ n * sum_c (l1_c - 1)(l2_c - 1) / n_cells }` using cell
/// densities.
pub fn moment_identity_rhs(l1: &GridMeasure, l2: &GridMeasure, n: usize) -> Result<f64> {
    if l1.n_cells() != l2.n_cells() {
        return Err(Error::GridMismatch(l1.n_cells(), l2.n_cells()));
    }
    let cells = l1.n_cells() as f64;
    let dot: f64 = (0..l1.n_cells())
        .map(|c| (l1.density(c) - 1.0) * (l2.density(c) - 1.0) / cells)
        .sum();
    Ok((n as f64 * dot).exp())
}

/// Monte Carlo `E_ref[exp(LLR(k; l1) + LLR(k; l2))]` with its standard error.
pub fn mc_moment_identity(
    l1: &GridMeasure,
    l2: &GridMeasure,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicas < 1_000 {
        return Err(Error::InvalidParameter("replicas must be >= 1000".into()));
    }
    if l1.n_cells() != l2.n_cells() {
        return Err(Error::GridMismatch(l1.n_cells(), l2.n_cells()));
    }
    let reference = GridMeasure::uniform(l1.n_cells());
    // ordered collect + sequential sum keeps the result bit-deterministic
    let values: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r);
            let pattern = sample_pattern(&reference, n, &mut rng);
            let a = log_likelihood_ratio(&pattern, l1).expect("same grid");
            let b = log_likelihood_ratio(&pattern, l2).expect("same grid");
            (a + b).exp()
        })
        .collect();
    Ok(mean_stderr(&values))
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sided Chernoff bound on `P(|counts(B)/n - mu| > delta)` for
/// `counts(B) ~ Poisson(n * mu)`:
///
/// upper tail `exp{-n[(mu+d) log((mu+d)/mu) - d]}` plus lower tail
/// `exp{-n[(mu-d) log((mu-d)/mu) + d]}`, with `0 log 0 := 0` so the lower
/// term equals `exp{-n mu}` when `d >= mu`. Capped at 2.
pub fn poisson_tail_bound(mu: f64, delta: f64, n: usize) -> Result<f64> {
    if !(mu > 0.0) || !(delta > 0.0) || n == 0 {
        return Err(Error::InvalidParameter("need mu > 0, delta > 0, n >= 1".into()));
    }
    let nf = n as f64;
    let upper = (-nf * ((mu + delta) * ((mu + delta) / mu).ln() - delta)).exp();
    let lower = if delta >= mu {
        (-nf * mu).exp()
    } else {
        (-nf * ((mu - delta) * ((mu - delta) / mu).ln() + delta)).exp()
    };
    Ok((upper + lower).min(2.0))
}

/// Empirical exceedance frequency `P(|counts/n - mu| > delta)` to check the
/// bound against.
pub fn mc_tail_frequency(mu: f64, delta: f64, n: usize, replicas: usize, seed: u64) -> f64 {
    let hits: u64 = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r);
            let count = poisson_draw(&mut rng, n as f64 * mu);
            u64::from((count as f64 / n as f64 - mu).abs() > delta)
        })
        .sum();
    hits as f64 / replicas as f64
}

/// Partition-test errors in the Poisson model: `z_j = counts(B_j) / n` with
/// independent Poisson counts on the disjoint sets.
pub fn poisson_partition_errors(
    spec: &PartitionTestSpec,
    f0: &DensityFamily,
    f1: &DensityFamily,
    n_values: &[usize],
    replicas: usize,
    seed: u64,
) -> Result<TestReport> {
    if f0.n_cells() != f1.n_cells() {
        return Err(Error::GridMismatch(f0.n_cells(), f1.n_cells()));
    }
    if replicas < 100 {
        return Err(Error::InvalidParameter("replicas must be >= 100".into()));
    }
    if n_values.is_empty() || n_values.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParameter("n_values must be nonempty and positive".into()));
    }
    let set_means = |fam: &DensityFamily| -> Result<Vec<Vec<f64>>> {
        fam.members()
            .iter()
            .map(|m| spec.sets().iter().map(|b| measure_of_set(m, b)).collect())
            .collect()
    };
    let means0 = set_means(f0)?;
    let means1 = set_means(f1)?;

    let reps = replicas as f64;
    let mut report = TestReport {
        n_values: n_values.to_vec(),
        alpha_hat: Vec::new(),
        beta_hat: Vec::new(),
        stderr_a: Vec::new(),
        stderr_b: Vec::new(),
        alpha_upper: Vec::new(),
        beta_upper: Vec::new(),
        replicas,
        seed,
        fitted_rate: 0.0,
        fit_r2: 0.0,
        rate_censored: false,
        degenerate: false,
    };
    for (ni, &n) in n_values.iter().enumerate() {
        let mut worst = [0.0f64; 2];
        for (side, means) in [(0u64, &means0), (1u64, &means1)] {
            for (mi, mu) in means.iter().enumerate() {
                let task = mix_seed(seed, &[side, mi as u64, ni as u64]);
                let wrong: u64 = (0..replicas as u64)
                    .into_par_iter()
                    .map(|r| {
                        let mut rng = ChaCha8Rng::seed_from_u64(task ^ r);
                        let z: Vec<f64> = mu
                            .iter()
                            .map(|&m| poisson_draw(&mut rng, n as f64 * m) as f64 / n as f64)
                            .collect();
                        let reject = knd_statistic(&z, spec.centers()) > 2.0 * spec.delta();
                        u64::from(reject == (side == 0))
                    })
                    .sum();
                worst[side as usize] = worst[side as usize].max(wrong as f64 / reps);
            }
        }
        let (a, b) = (worst[0], worst[1]);
        report.alpha_hat.push(a);
        report.beta_hat.push(b);
        report.stderr_a.push((a * (1.0 - a) / reps).sqrt());
        report.stderr_b.push((b * (1.0 - b) / reps).sqrt());
        report.alpha_upper.push(if a == 0.0 { 3.0 / reps } else { a });
        report.beta_upper.push(if b == 0.0 { 3.0 / reps } else { b });
    }
    if n_values.len() >= 2 {
        if let Ok((c, r2)) = fit_exponential_rate(&report) {
            report.fitted_rate = c;
            report.fit_r2 = r2;
            report.rate_censored = report
                .n_values
                .iter()
                .enumerate()
                .filter(|&(i, _)| report.alpha_hat[i].max(report.beta_hat[i]) > 0.0)
                .count()
                < 3;
        }
    }
    Ok(report)
}

/// The orthogonal sine design `lambda_j = 1 + sin(2 pi j x)` with
/// `||lambda_j - 1||^2 = v = 1/2`.
pub const SINE_DESIGN_V: f64 = 0.5;

/// Closed-form Bayes mixture variance `(e^{n v} - 1)/m` for each `m`.
pub fn bayes_collapse_curve(n: usize, m_values: &[usize], v: f64) -> Result<Vec<f64>> {
    if m_values.is_empty() || m_values.iter().any(|&m| m == 0) {
        return Err(Error::InvalidParameter("m_values must be nonempty and positive".into()));
    }
    if !(v >= 0.0) {
        return Err(Error::InvalidParameter(format!("v must be >= 0, got {v}")));
    }
    let top = (n as f64 * v).exp() - 1.0;
    Ok(m_values.iter().map(|&m| top / m as f64).collect())
}

/// The same variance evaluated as the explicit double sum
/// `m^{-2} sum_{j1,j2} exp{n <l_{j1}-1, l_{j2}-1>} - 1` with the orthogonal
/// design's Gram matrix (`v` on the diagonal, 0 off it).
pub fn bayes_collapse_double_sum(n: usize, m: usize, v: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let nf = n as f64;
    let mut total = 0.0;
    for j1 in 0..m {
        for j2 in 0..m {
            let dot = if j1 == j2 { v } else { 0.0 };
            total += (nf * dot).exp();
        }
    }
    Ok(total / (m as f64 * m as f64) - 1.0)
}

/// Monte Carlo estimate of `E_ref[(I_m - 1)^2]` for the sine design,
/// `I_m = m^{-1} sum_j exp(LLR(k; lambda_j))`, sampling `k` under the
/// reference process.
pub fn mc_bayes_collapse(
    n: usize,
    m: usize,
    n_cells: usize,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicas < 1_000 {
        return Err(Error::InvalidParameter("replicas must be >= 1000".into()));
    }
    if m == 0 || m > n_cells / 4 {
        return Err(Error::InvalidParameter(format!(
            "m = {m} not resolvable on {n_cells} cells (need 1 <= m <= n_cells/4)"
        )));
    }
    let lambdas: Vec<GridMeasure> =
        (1..=m).map(|j| sine_density(j, n_cells)).collect::<Result<_>>()?;
    // Under the unit reference the pattern is a Poisson(n) number of atoms
    // placed uniformly over the cells, so the likelihood ratios only need
    // the (few) occupied cells.
    let values: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ r);
            let total = poisson_draw(&mut rng, n as f64);
            let atoms: Vec<usize> = (0..total)
                .map(|_| rand::Rng::gen_range(&mut rng, 0..n_cells))
                .collect();
            let i_m = lambdas
                .iter()
                .map(|l| {
                    let mut llr = -(n as f64) * (l.mass() - 1.0);
                    for &c in &atoms {
                        llr += l.density(c).ln();
                    }
                    llr.exp()
                })
                .sum::<f64>()
                / m as f64;
            (i_m - 1.0) * (i_m - 1.0)
        })
        .collect();
    Ok(mean_stderr(&values))
}

/// Two-sample chi-square comparison of conditioned-Poisson and multinomial
/// cell counts.
///
/// Conditioned on the total count `N = l`, a pooled Poisson pattern is
/// distributed as `l` i.i.d. draws from `mu / mu(Omega)`. Poisson replicas
/// whose total hits `target_total` are pooled per cell and compared with
/// pooled multinomial samples of the same size via
/// `X^2 = sum_c (a_c - b_c)^2 / (a_c + b_c)` (df = cells - 1).
pub fn conditional_reduction_chisq(
    intensity: &GridMeasure,
    n: usize,
    target_total: u64,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicas < 1_000 {
        return Err(Error::InvalidParameter("replicas must be >= 1000".into()));
    }
    let cells = intensity.n_cells();
    let probs: Vec<f64> =
        intensity.weights().iter().map(|&w| w / intensity.mass()).collect();

    // pooled per-cell counts of conditioned Poisson patterns
    let mut pois = vec![0u64; cells];
    let mut kept = 0u64;
    let mut r = 0u64;
    let max_attempts = 200 * replicas as u64;
    while kept < replicas as u64 && r < max_attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0, r]));
        let pattern = sample_pattern(intensity, n, &mut rng);
        if pattern.total() == target_total {
            for (p, &c) in pois.iter_mut().zip(&pattern.counts) {
                *p += c;
            }
            kept += 1;
        }
        r += 1;
    }
    if kept < replicas as u64 / 2 {
        return Err(Error::InvalidParameter(format!(
            "total count {target_total} too rare: kept {kept} of {replicas} wanted"
        )));
    }

    // pooled multinomial counts of the same shape
    let mut multi = vec![0u64; cells];
    for r in 0..kept {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[1, r]));
        let draws =
            crate::partition::multinomial_counts(&mut rng, target_total, &probs);
        for (m, &c) in multi.iter_mut().zip(&draws) {
            *m += c;
        }
    }

    let mut stat = 0.0;
    for (&a, &b) in pois.iter().zip(&multi) {
        let s = (a + b) as f64;
        if s > 0.0 {
            let d = a as f64 - b as f64;
            stat += d * d / s;
        }
    }
    let df = (cells - 1) as f64;
    let crit = statrs::distribution::ChiSquared::new(df)
        .expect("positive df")
        .inverse_cdf(0.999);
    Ok((stat, crit))
}

use statrs::distribution::ContinuousCDF;
