//! The partition test `K_{n delta}` and its Monte Carlo error analysis.
//!
//! The test fixes disjoint sets `B_1..B_k`, compares the empirical
//! frequencies `z_j = #{X_s in B_j}/n` with the images `x_i = (P_i(B_j))_j`
//! of the null family, and rejects when `min_i max_j |z_j - x_ij| > 2 delta`.
//! With a `4 delta` sup-norm gap between the null and alternative images both
//! error probabilities decay exponentially in `n` (Hoeffding envelope
//! `2k exp(-2 n delta^2)`).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{measure_of_set, DensityFamily, DyadicSet, GridMeasure};

/// Separation below this is treated as no separation at all.
const GAP_EPS: f64 = 1e-12;

/// A fixed partition test: sets, null centers, and the radius `delta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionTestSpec {
    sets: Vec<DyadicSet>,
    centers: Vec<Vec<f64>>,
    delta: f64,
}

impl PartitionTestSpec {
    /// Spec for probability measures: every center coordinate must lie in `[0,1]`.
    pub fn new(sets: Vec<DyadicSet>, centers: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        let spec = Self::new_general(sets, centers, delta)?;
        for x in &spec.centers {
            for &v in x {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "center coordinate {v} outside [0,1]"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// Spec for general finite measures (Poisson intensities): centers only
    /// need to be finite and nonnegative.
    pub fn new_general(
        sets: Vec<DyadicSet>,
        centers: Vec<Vec<f64>>,
        delta: f64,
    ) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::EmptyInput("partition sets".into()));
        }
        if centers.is_empty() {
            return Err(Error::EmptyInput("partition centers".into()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let mut seen = std::collections::HashSet::new();
        for b in &sets {
            for &c in b.cells() {
                if !seen.insert(c) {
                    return Err(Error::InvalidParameter(format!(
                        "sets are not pairwise disjoint: cell {c} repeated"
                    )));
                }
            }
        }
        for x in &centers {
            if x.len() != sets.len() {
                return Err(Error::DimensionMismatch { expected: sets.len(), got: x.len() });
            }
            if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidParameter("center coordinate must be finite and >= 0".into()));
            }
        }
        Ok(Self { sets, centers, delta })
    }

    pub fn sets(&self) -> &[DyadicSet] {
        &self.sets
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of sets `k`.
    pub fn k(&self) -> usize {
        self.sets.len()
    }

    /// Number of null centers `l`.
    pub fn l(&self) -> usize {
        self.centers.len()
    }
}

/// Monte Carlo error estimates of a test across sample sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub n_values: Vec<usize>,
    /// Worst case over the null family of the rejection frequency.
    pub alpha_hat: Vec<f64>,
    /// Worst case over the alternative family of the acceptance frequency.
    pub beta_hat: Vec<f64>,
    pub stderr_a: Vec<f64>,
    pub stderr_b: Vec<f64>,
    /// Rule-of-three upper bound `3/replicas` substituted where the point
    /// estimate is exactly zero, else the point estimate.
    pub alpha_upper: Vec<f64>,
    pub beta_upper: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    pub fitted_rate: f64,
    pub fit_r2: f64,
    /// True when the rate had to be fitted on censored (zero-replaced) values,
    /// so it reads as a lower bound rather than an estimate.
    pub rate_censored: bool,
    /// True when the two families share a member, so no test can separate them.
    pub degenerate: bool,
}

/// `z_j = #{x in sample : x in B_j} / n` for cell-index samples.
pub fn empirical_frequencies(sample: &[usize], sets: &[DyadicSet]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptyInput("sample".into()));
    }
    let n = sample.len() as f64;
    Ok(sets
        .iter()
        .map(|b| {
            let hits = sample.iter().filter(|x| b.cells().binary_search(x).is_ok()).count();
            hits as f64 / n
        })
        .collect())
}

/// The test statistic `min_i max_j |z_j - x_ij|`.
pub fn knd_statistic(z: &[f64], centers: &[Vec<f64>]) -> f64 {
    centers
        .iter()
        .map(|x| {
            z.iter()
                .zip(x)
                .map(|(&zj, &xj)| (zj - xj).abs())
                .fold(0.0f64, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// The decision rule: reject (1) iff the statistic exceeds `2 delta`.
/// Ties accept, keeping the type I error conservative.
pub fn knd_decide(z: &[f64], spec: &PartitionTestSpec) -> Result<u8> {
    if z.len() != spec.k() {
        return Err(Error::DimensionMismatch { expected: spec.k(), got: z.len() });
    }
    Ok(u8::from(knd_statistic(z, &spec.centers) > 2.0 * spec.delta))
}

/// Image of a measure under the `B`-coordinates.
pub fn image_coordinates(p: &GridMeasure, sets: &[DyadicSet]) -> Result<Vec<f64>> {
    sets.iter().map(|b| measure_of_set(p, b)).collect()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Builds the test whose centers are the images of `f0`, with
/// `delta = (minimal cross-pair sup-norm image distance) / 4`, so the
/// `4 delta` gap condition holds by construction.
pub fn build_test_from_families(
    f0: &DensityFamily,
    f1: &DensityFamily,
    sets: &[DyadicSet],
) -> Result<PartitionTestSpec> {
    if f0.n_cells() != f1.n_cells() {
        return Err(Error::GridMismatch(f0.n_cells(), f1.n_cells()));
    }
    let centers: Vec<Vec<f64>> =
        f0.members().iter().map(|p| image_coordinates(p, sets)).collect::<Result<_>>()?;
    let images1: Vec<Vec<f64>> =
        f1.members().iter().map(|q| image_coordinates(q, sets)).collect::<Result<_>>()?;
    let mut gap = f64::INFINITY;
    for x in &centers {
        for y in &images1 {
            gap = gap.min(sup_distance(x, y));
        }
    }
    if gap <= GAP_EPS {
        return Err(Error::NoSeparation);
    }
    let delta = gap / 4.0;
    if f0.is_probability() && f1.is_probability() {
        PartitionTestSpec::new(sets.to_vec(), centers, delta)
    } else {
        PartitionTestSpec::new_general(sets.to_vec(), centers, delta)
    }
}

/// Greedy search for dyadic intervals separating the images of two families.
///
/// Candidates are all dyadic intervals up to `max_resolution`, ordered by
/// resolution then index. Each step adds the interval that most improves the
/// smallest cross-pair sup-norm image distance; the search stops when no
/// candidate improves it or `max_k` sets are chosen.
pub fn find_separating_sets(
    f0: &DensityFamily,
    f1: &DensityFamily,
    max_k: usize,
    max_resolution: u32,
) -> Result<(Vec<DyadicSet>, f64)> {
    if f0.n_cells() != f1.n_cells() {
        return Err(Error::GridMismatch(f0.n_cells(), f1.n_cells()));
    }
    if max_k == 0 {
        return Err(Error::InvalidParameter("max_k must be >= 1".into()));
    }
    let n_cells = f0.n_cells();
    let mut candidates = Vec::new();
    for r in 0..=max_resolution {
        let parts = 1usize << r;
        if parts > n_cells {
            break;
        }
        for j in 0..parts {
            candidates.push(DyadicSet::interval(n_cells, r, j)?);
        }
    }
    // |P(B) - Q(B)| per cross pair, per candidate
    let pair_dist: Vec<Vec<f64>> = candidates
        .iter()
        .map(|b| {
            let im0: Vec<f64> =
                f0.members().iter().map(|p| measure_of_set(p, b)).collect::<Result<_>>()?;
            let im1: Vec<f64> =
                f1.members().iter().map(|q| measure_of_set(q, b)).collect::<Result<_>>()?;
            let mut d = Vec::with_capacity(im0.len() * im1.len());
            for &a in &im0 {
                for &b in &im1 {
                    d.push((a - b).abs());
                }
            }
            Ok(d)
        })
        .collect::<Result<_>>()?;

    let n_pairs = f0.len() * f1.len();
    let mut current = vec![0.0f64; n_pairs]; // max over chosen sets, per pair
    let mut chosen: Vec<usize> = Vec::new();
    let mut occupied = vec![false; n_cells]; // cells covered by chosen sets
    let mut objective = 0.0f64;
    while chosen.len() < max_k {
        let mut best: Option<(usize, f64)> = None;
        for (ci, dist) in pair_dist.iter().enumerate() {
            // keep the chosen sets pairwise disjoint so they always form a
            // valid partition-test spec
            if candidates[ci].cells().iter().any(|&c| occupied[c]) {
                continue;
            }
            let new_obj = current
                .iter()
                .zip(dist)
                .map(|(&cur, &d)| cur.max(d))
                .fold(f64::INFINITY, f64::min);
            if best.map_or(true, |(_, b)| new_obj > b + GAP_EPS) {
                best = Some((ci, new_obj));
            }
        }
        match best {
            Some((ci, new_obj)) if new_obj > objective + GAP_EPS => {
                for (cur, &d) in current.iter_mut().zip(&pair_dist[ci]) {
                    *cur = cur.max(d);
                }
                for &c in candidates[ci].cells() {
                    occupied[c] = true;
                }
                chosen.push(ci);
                objective = new_obj;
            }
            _ => break,
        }
    }
    if objective <= GAP_EPS {
        return Err(Error::NoSeparation);
    }
    chosen.sort_unstable();
    Ok((chosen.into_iter().map(|ci| candidates[ci].clone()).collect(), objective))
}

/// Deterministic per-task seed derivation (splitmix64 rounds).
pub(crate) fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    let mut x = seed;
    for &p in parts {
        x = x.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(p);
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
    }
    x
}

/// Multinomial counts over `probs` plus an implicit remainder category,
/// drawn as a chain of binomials (identical in law to `n` categorical draws).
pub(crate) fn multinomial_counts(
    rng: &mut ChaCha8Rng,
    n: u64,
    probs: &[f64],
) -> Vec<u64> {
    let mut remaining = n;
    let mut rest = 1.0f64;
    let mut out = Vec::with_capacity(probs.len());
    for &p in probs {
        if remaining == 0 || rest <= 0.0 {
            out.push(0);
            continue;
        }
        let cond = (p / rest).clamp(0.0, 1.0);
        let draw = if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond).expect("valid binomial").sample(rng)
        };
        out.push(draw);
        remaining -= draw;
        rest -= p;
    }
    out
}

/// Probability that a replica of size `n` from `truth` is decided wrongly.
///
/// `wrong_is_reject` selects which decision counts as the error (reject for
/// null members, accept for alternative members).
fn wrong_decision_count(
    spec: &PartitionTestSpec,
    set_probs: &[f64],
    n: usize,
    replicas: usize,
    task_seed: u64,
    wrong_is_reject: bool,
) -> u64 {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(task_seed ^ r);
            let counts = multinomial_counts(&mut rng, n as u64, set_probs);
            let z: Vec<f64> =
                counts.iter().map(|&c| c as f64 / n as f64).collect();
            let reject = knd_statistic(&z, spec.centers()) > 2.0 * spec.delta();
            u64::from(reject == wrong_is_reject)
        })
        .sum()
}

fn families_share_member(f0: &DensityFamily, f1: &DensityFamily) -> bool {
    f0.members().iter().any(|p| {
        f1.members().iter().any(|q| {
            p.weights()
                .iter()
                .zip(q.weights())
                .all(|(&a, &b)| (a - b).abs() <= 1e-15)
        })
    })
}

/// Monte Carlo worst-case error estimates of `spec` against both families.
///
/// Replica `r` of every (member, n) task uses the RNG stream
/// `task_seed ^ r`, so results are bit-identical regardless of scheduling.
pub fn estimate_errors(
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
    let probs_of = |p: &GridMeasure| -> Result<Vec<f64>> {
        image_coordinates(p, spec.sets())
    };
    let side_probs = |fam: &DensityFamily| -> Result<Vec<Vec<f64>>> {
        fam.members().iter().map(probs_of).collect()
    };
    let probs0 = side_probs(f0)?;
    let probs1 = side_probs(f1)?;

    let mut alpha_hat = Vec::new();
    let mut beta_hat = Vec::new();
    let mut stderr_a = Vec::new();
    let mut stderr_b = Vec::new();
    let mut alpha_upper = Vec::new();
    let mut beta_upper = Vec::new();
    let reps = replicas as f64;
    for (ni, &n) in n_values.iter().enumerate() {
        let mut worst = [0.0f64; 2];
        for (side, probs) in [(0u64, &probs0), (1u64, &probs1)] {
            for (mi, set_probs) in probs.iter().enumerate() {
                let task = mix_seed(seed, &[side, mi as u64, ni as u64]);
                let wrong = wrong_decision_count(
                    spec,
                    set_probs,
                    n,
                    replicas,
                    task,
                    side == 0,
                );
                let p_hat = wrong as f64 / reps;
                if p_hat > worst[side as usize] {
                    worst[side as usize] = p_hat;
                }
            }
        }
        let (a, b) = (worst[0], worst[1]);
        alpha_hat.push(a);
        beta_hat.push(b);
        stderr_a.push((a * (1.0 - a) / reps).sqrt());
        stderr_b.push((b * (1.0 - b) / reps).sqrt());
        alpha_upper.push(if a == 0.0 { 3.0 / reps } else { a });
        beta_upper.push(if b == 0.0 { 3.0 / reps } else { b });
    }

    let mut report = TestReport {
        n_values: n_values.to_vec(),
        alpha_hat,
        beta_hat,
        stderr_a,
        stderr_b,
        alpha_upper,
        beta_upper,
        replicas,
        seed,
        fitted_rate: 0.0,
        fit_r2: 0.0,
        rate_censored: false,
        degenerate: families_share_member(f0, f1),
    };
    if n_values.len() >= 2 {
        if let Ok((c, r2)) = fit_exponential_rate(&report) {
            report.fitted_rate = c;
            report.fit_r2 = r2;
            report.rate_censored =
                report.n_values.iter().enumerate().filter(|&(i, _)| {
                    report.alpha_hat[i].max(report.beta_hat[i]) > 0.0
                }).count() < 3;
        }
    }
    Ok(report)
}

/// Least-squares fit of `-log(max(alpha, beta))` against `n`.
///
/// Zero estimates are censored observations, not measurements; the fit uses
/// the uncensored points when at least three exist, and otherwise falls back
/// to the `1/(2 replicas)` replacement (the returned rate then reads as a
/// lower bound).
pub fn fit_exponential_rate(report: &TestReport) -> Result<(f64, f64)> {
    if report.n_values.len() < 2 {
        return Err(Error::InvalidParameter("need at least 2 sample sizes to fit".into()));
    }
    let errs: Vec<f64> = report
        .alpha_hat
        .iter()
        .zip(&report.beta_hat)
        .map(|(&a, &b)| a.max(b))
        .collect();
    let uncensored: Vec<(f64, f64)> = report
        .n_values
        .iter()
        .zip(&errs)
        .filter(|&(_, &e)| e > 0.0)
        .map(|(&n, &e)| (n as f64, -e.ln()))
        .collect();
    let points: Vec<(f64, f64)> = if uncensored.len() >= 3 {
        uncensored
    } else {
        let floor = 0.5 / report.replicas as f64;
        report
            .n_values
            .iter()
            .zip(&errs)
            .map(|(&n, &e)| (n as f64, -(e.max(floor)).ln()))
            .collect()
    };
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = points.iter().map(|p| p.1 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return Err(Error::InvalidParameter("degenerate n grid for rate fit".into()));
    }
    let slope = (m * sxy - sx * sy) / denom;
    let var_y = m * syy - sy * sy;
    let r2 = if var_y <= 1e-24 {
        // flat response: a zero slope explains it perfectly
        1.0
    } else {
        let cov = m * sxy - sx * sy;
        (cov * cov) / (denom * var_y)
    };
    Ok((slope.max(0.0), r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{sample, sine_density, DensityFamily, GridMeasure};
    use std::f64::consts::PI;

    fn uniform_vs_sine(n_cells: usize) -> (DensityFamily, DensityFamily) {
        (
            DensityFamily::new(vec![GridMeasure::uniform(n_cells)]).unwrap(),
            DensityFamily::new(vec![sine_density(1, n_cells).unwrap()]).unwrap(),
        )
    }

    #[test]
    fn empirical_frequencies_counting() {
        let b1 = DyadicSet::new(vec![0]).unwrap();
        let b2 = DyadicSet::new(vec![5, 6]).unwrap();
        let z = empirical_frequencies(&[0, 0, 5, 7], &[b1.clone(), b2.clone()]).unwrap();
        assert_eq!(z, vec![0.5, 0.25]);
        assert!(empirical_frequencies(&[], &[b1]).is_err());
        // all points in B1, k = 2
        let z = empirical_frequencies(&[0, 0, 0], &[
            DyadicSet::new(vec![0]).unwrap(),
            DyadicSet::new(vec![1]).unwrap(),
        ])
        .unwrap();
        assert_eq!(z, vec![1.0, 0.0]);
    }

    #[test]
    fn empirical_frequencies_uniform_law() {
        let u = GridMeasure::uniform(16);
        let xs = sample(&u, 1_000_000, 11).unwrap();
        let sets = vec![
            DyadicSet::interval(16, 2, 0).unwrap(),
            DyadicSet::interval(16, 2, 1).unwrap(),
        ];
        let z = empirical_frequencies(&xs, &sets).unwrap();
        for &zj in &z {
            assert!((zj - 0.25).abs() < 0.002, "z = {z:?}");
        }
    }

    #[test]
    fn knd_decide_rules() {
        let sets = vec![
            DyadicSet::interval(16, 2, 0).unwrap(),
            DyadicSet::interval(16, 2, 1).unwrap(),
        ];
        let spec =
            PartitionTestSpec::new(sets, vec![vec![0.25, 0.25]], 0.05).unwrap();
        // at a center
        assert_eq!(knd_decide(&[0.25, 0.25], &spec).unwrap(), 0);
        // max gap 0.11 > 2 delta = 0.10
        assert_eq!(knd_decide(&[0.25, 0.36], &spec).unwrap(), 1);
        // tie at exactly 2 delta accepts
        assert_eq!(knd_decide(&[0.25, 0.35], &spec).unwrap(), 0);
        assert!(knd_decide(&[0.25], &spec).is_err());
    }

    #[test]
    fn knd_center_order_invariance() {
        let sets = vec![
            DyadicSet::interval(16, 2, 0).unwrap(),
            DyadicSet::interval(16, 2, 1).unwrap(),
        ];
        let a = vec![0.1, 0.2];
        let b = vec![0.6, 0.7];
        let s1 =
            PartitionTestSpec::new(sets.clone(), vec![a.clone(), b.clone()], 0.02).unwrap();
        let s2 = PartitionTestSpec::new(sets, vec![b, a], 0.02).unwrap();
        for z in [[0.1, 0.2], [0.4, 0.4], [0.65, 0.72]] {
            assert_eq!(knd_decide(&z, &s1).unwrap(), knd_decide(&z, &s2).unwrap());
        }
    }

    #[test]
    fn spec_validation() {
        let overlapping = vec![
            DyadicSet::new(vec![0, 1]).unwrap(),
            DyadicSet::new(vec![1, 2]).unwrap(),
        ];
        assert!(PartitionTestSpec::new(overlapping, vec![vec![0.1, 0.1]], 0.1).is_err());
        let sets = vec![DyadicSet::new(vec![0]).unwrap()];
        assert!(PartitionTestSpec::new(sets.clone(), vec![vec![1.5]], 0.1).is_err());
        assert!(PartitionTestSpec::new_general(sets.clone(), vec![vec![1.5]], 0.1).is_ok());
        assert!(PartitionTestSpec::new(sets, vec![vec![0.5]], 0.0).is_err());
    }

    #[test]
    fn build_test_uniform_vs_sine() {
        let (f0, f1) = uniform_vs_sine(4096);
        let sets = vec![DyadicSet::interval(4096, 1, 0).unwrap()];
        let spec = build_test_from_families(&f0, &f1, &sets).unwrap();
        // gap = |1/2 - (1/2 + 1/pi)| = 1/pi, delta = gap/4
        assert!((spec.delta() - 1.0 / (4.0 * PI)).abs() < 1e-3);
        assert_eq!(spec.centers(), &[vec![0.5]]);
    }

    #[test]
    fn build_test_no_separation_and_point_mass() {
        let (f0, _) = uniform_vs_sine(256);
        let sets = vec![DyadicSet::interval(256, 1, 0).unwrap()];
        assert!(matches!(
            build_test_from_families(&f0, &f0, &sets),
            Err(Error::NoSeparation)
        ));
        let f1 =
            DensityFamily::new(vec![GridMeasure::point_mass(256, 0).unwrap()]).unwrap();
        let cell0 = vec![DyadicSet::new(vec![0]).unwrap()];
        let spec = build_test_from_families(&f0, &f1, &cell0).unwrap();
        assert!((spec.delta() - (1.0 - 1.0 / 256.0) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn find_sets_single_interval() {
        let (f0, f1) = uniform_vs_sine(4096);
        let (sets, gap) = find_separating_sets(&f0, &f1, 1, 1).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0], DyadicSet::interval(4096, 1, 0).unwrap());
        assert!((gap - 1.0 / PI).abs() < 1e-3, "gap = {gap}");
    }

    #[test]
    fn find_sets_identical_families() {
        let (f0, _) = uniform_vs_sine(64);
        assert!(matches!(
            find_separating_sets(&f0, &f0, 4, 3),
            Err(Error::NoSeparation)
        ));
    }

    #[test]
    fn find_sets_two_sines() {
        // exact integrals: int_B sin(2 pi i x) dx over B = [0,1/4) is
        // 1/(2 pi) for both i = 1 and i = 2
        let f0 = DensityFamily::new(vec![GridMeasure::uniform(4096)]).unwrap();
        let f1 = DensityFamily::new(vec![
            sine_density(1, 4096).unwrap(),
            sine_density(2, 4096).unwrap(),
        ])
        .unwrap();
        let (_, gap) = find_separating_sets(&f0, &f1, 2, 2).unwrap();
        assert!(gap >= 1.0 / (2.0 * PI) - 1e-3, "gap = {gap}");
    }

    #[test]
    fn estimate_errors_small_at_large_n() {
        let (f0, f1) = uniform_vs_sine(4096);
        let sets = vec![DyadicSet::interval(4096, 1, 0).unwrap()];
        let spec = build_test_from_families(&f0, &f1, &sets).unwrap();
        let report =
            estimate_errors(&spec, &f0, &f1, &[10, 1000], 10_000, 99).unwrap();
        // Hoeffding: alpha(1000) <= 2 exp(-2 * 1000 * delta^2) ~ 2e-6
        assert_eq!(report.alpha_hat[1], 0.0);
        assert_eq!(report.beta_hat[1], 0.0);
        // errors shrink with n
        assert!(report.alpha_hat[0] >= report.alpha_hat[1]);
        assert!(report.beta_hat[0] >= report.beta_hat[1]);
        assert!(!report.degenerate);
        // determinism
        let again = estimate_errors(&spec, &f0, &f1, &[10, 1000], 10_000, 99).unwrap();
        assert_eq!(report.alpha_hat, again.alpha_hat);
        assert_eq!(report.beta_hat, again.beta_hat);
    }

    #[test]
    fn estimate_errors_flags_degenerate() {
        let (f0, _) = uniform_vs_sine(64);
        let sets = vec![DyadicSet::interval(64, 1, 0).unwrap()];
        let spec = PartitionTestSpec::new(sets, vec![vec![0.5]], 0.05).unwrap();
        let report = estimate_errors(&spec, &f0, &f0, &[100], 200, 5).unwrap();
        assert!(report.degenerate);
        // truth satisfies the null, so the test accepts: beta ~ 1
        assert!(report.beta_hat[0] > 0.9);
    }

    #[test]
    fn fit_rate_synthetic() {
        let n_values = vec![50usize, 100, 200, 400];
        let errs: Vec<f64> = n_values.iter().map(|&n| (-0.1 * n as f64).exp()).collect();
        let report = TestReport {
            n_values: n_values.clone(),
            alpha_hat: errs.clone(),
            beta_hat: vec![0.0; 4],
            stderr_a: vec![0.0; 4],
            stderr_b: vec![0.0; 4],
            alpha_upper: errs,
            beta_upper: vec![0.0; 4],
            replicas: 1000,
            seed: 0,
            fitted_rate: 0.0,
            fit_r2: 0.0,
            rate_censored: false,
            degenerate: false,
        };
        let (c, r2) = fit_exponential_rate(&report).unwrap();
        assert!((c - 0.1).abs() < 1e-12, "c = {c}");
        assert!((r2 - 1.0).abs() < 1e-12, "r2 = {r2}");

        let flat = TestReport {
            alpha_hat: vec![0.5; 4],
            alpha_upper: vec![0.5; 4],
            ..report
        };
        let (c, _) = fit_exponential_rate(&flat).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn multinomial_matches_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let probs = [0.5, 0.25];
        let reps = 20_000u64;
        let mut sums = [0u64; 2];
        for _ in 0..reps {
            let c = multinomial_counts(&mut rng, 8, &probs);
            sums[0] += c[0];
            sums[1] += c[1];
        }
        let m0 = sums[0] as f64 / reps as f64;
        let m1 = sums[1] as f64 / reps as f64;
        assert!((m0 - 4.0).abs() < 0.05, "m0 = {m0}");
        assert!((m1 - 2.0).abs() < 0.05, "m1 = {m1}");
    }
}
