//! Signal detection in the Gaussian sequence model.
//!
//! Observations live in coordinates: `Y_j = scales_j * S_j + epsilon * xi_j`
//! with `xi_j` i.i.d. standard normal. White noise has `scales = 1`;
//! heteroscedastic and diagonal ill-posed models (`Y = Ax + eps xi`, noise
//! covariance `R`) reduce to this form after whitening `Z = R^{-1/2} Y`,
//! which turns the signal multipliers into `A_j / sqrt(R_j)` with unit noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::partition::mix_seed;

/// Maximum number of coordinates kept; the separating subspace is finite
/// dimensional anyway.
pub const D_MAX: usize = 64;

/// A signal (or parameter) as coordinates in a fixed orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalVector {
    coeffs: Vec<f64>,
}

impl SignalVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > D_MAX {
            return Err(Error::InvalidParameter(format!(
                "signal must have 1..={D_MAX} coordinates, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite signal coordinate".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    /// `r * e_j` (1-based index `j`).
    pub fn basis(dim: usize, j: usize, r: f64) -> Result<Self> {
        if j == 0 || j > dim {
            return Err(Error::IndexOutOfRange { index: j, n_cells: dim });
        }
        let mut c = vec![0.0; dim];
        c[j - 1] = r;
        Self::new(c)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Noise level and per-coordinate signal multipliers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceModel {
    pub epsilon: f64,
    pub scales: Vec<f64>,
}

impl SequenceModel {
    pub fn new(epsilon: f64, scales: Vec<f64>) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter("scales must be positive and finite".into()));
        }
        Ok(Self { epsilon, scales })
    }

    /// White noise: unit scales.
    pub fn white(epsilon: f64, dim: usize) -> Result<Self> {
        Self::new(epsilon, vec![1.0; dim])
    }
}

/// Finite-dimensional projection test: accept when the projected observation
/// is within `rho` of some null center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionTestSpec {
    gamma_dims: Vec<usize>,
    centers: Vec<Vec<f64>>,
    rho: f64,
}

impl ProjectionTestSpec {
    pub fn new(gamma_dims: Vec<usize>, centers: Vec<Vec<f64>>, rho: f64) -> Result<Self> {
        let mut sorted = gamma_dims.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate projection dimension".into()));
        }
        if gamma_dims.is_empty() || gamma_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter("projection dims are 1-based and nonempty".into()));
        }
        if centers.is_empty() {
            return Err(Error::EmptyInput("projection centers".into()));
        }
        for c in &centers {
            if c.len() != gamma_dims.len() {
                return Err(Error::DimensionMismatch { expected: gamma_dims.len(), got: c.len() });
            }
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        Ok(Self { gamma_dims, centers, rho })
    }

    pub fn gamma_dims(&self) -> &[usize] {
        &self.gamma_dims
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Restriction of a coordinate vector to the 1-based dims of `gamma`;
/// coordinates past the vector's length are zero.
fn restrict(coeffs: &[f64], gamma_dims: &[usize]) -> Vec<f64> {
    gamma_dims
        .iter()
        .map(|&d| coeffs.get(d - 1).copied().unwrap_or(0.0))
        .collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One observation `Y_j = scales_j * S_j + epsilon * xi_j`.
pub fn simulate_observation(s: &SignalVector, model: &SequenceModel, seed: u64) -> Result<Vec<f64>> {
    if s.dim() != model.scales.len() {
        return Err(Error::DimensionMismatch { expected: model.scales.len(), got: s.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(observe(s, model, &mut rng))
}

fn observe(s: &SignalVector, model: &SequenceModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    s.coeffs()
        .iter()
        .zip(&model.scales)
        .map(|(&sj, &aj)| {
            let xi: f64 = StandardNormal.sample(rng);
            aj * sj + model.epsilon * xi
        })
        .collect()
}

/// Raw diagonal ill-posed observation `Y_j = A_j x_j + eps * sqrt(R_j) xi_j`
/// (noise covariance `R`), before whitening.
pub fn observe_illposed(
    x: &SignalVector,
    a_diag: &[f64],
    r_diag: &[f64],
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if x.dim() != a_diag.len() || a_diag.len() != r_diag.len() {
        return Err(Error::DimensionMismatch { expected: a_diag.len(), got: x.dim() });
    }
    Ok(x.coeffs()
        .iter()
        .zip(a_diag.iter().zip(r_diag))
        .map(|(&xj, (&aj, &rj))| {
            let xi: f64 = StandardNormal.sample(rng);
            aj * xj + epsilon * rj.sqrt() * xi
        })
        .collect())
}

/// Whitening multipliers `scales_j = A_j / sqrt(R_j)`; after `Z = R^{-1/2} Y`
/// the noise is white with the same `epsilon`.
pub fn whiten(a_diag: &[f64], r_diag: &[f64]) -> Result<Vec<f64>> {
    if a_diag.len() != r_diag.len() {
        return Err(Error::DimensionMismatch { expected: a_diag.len(), got: r_diag.len() });
    }
    a_diag
        .iter()
        .zip(r_diag)
        .map(|(&a, &r)| {
            if a > 0.0 && r > 0.0 && a.is_finite() && r.is_finite() {
                Ok(a / r.sqrt())
            } else {
                Err(Error::SingularOperator(format!("nonpositive diagonal entry (A={a}, R={r})")))
            }
        })
        .collect()
}

/// Coordinate-wise `R^{-1/2} y`.
pub fn whiten_observation(y: &[f64], r_diag: &[f64]) -> Result<Vec<f64>> {
    if y.len() != r_diag.len() {
        return Err(Error::DimensionMismatch { expected: r_diag.len(), got: y.len() });
    }
    Ok(y.iter().zip(r_diag).map(|(&v, &r)| v / r.sqrt()).collect())
}

/// Minimal cross-pair Euclidean distance between the projected families.
pub fn projection_gap(
    f0: &[SignalVector],
    f1: &[SignalVector],
    gamma_dims: &[usize],
) -> Result<f64> {
    if f0.is_empty() || f1.is_empty() {
        return Err(Error::EmptyInput("signal family".into()));
    }
    let mut gap = f64::INFINITY;
    for s in f0 {
        let ps = restrict(s.coeffs(), gamma_dims);
        for t in f1 {
            let pt = restrict(t.coeffs(), gamma_dims);
            gap = gap.min(euclid(&ps, &pt));
        }
    }
    Ok(gap)
}

/// Test with centers at the projected null signals, scaled by the model's
/// multipliers, and radius `rho = gap / 2` (midpoint rule).
pub fn build_projection_test(
    f0: &[SignalVector],
    f1: &[SignalVector],
    gamma_dims: &[usize],
    scales: &[f64],
) -> Result<ProjectionTestSpec> {
    let scale_signal = |s: &SignalVector| -> Result<SignalVector> {
        if s.dim() != scales.len() {
            return Err(Error::DimensionMismatch { expected: scales.len(), got: s.dim() });
        }
        SignalVector::new(
            s.coeffs().iter().zip(scales).map(|(&c, &a)| c * a).collect(),
        )
    };
    let g0: Vec<SignalVector> = f0.iter().map(scale_signal).collect::<Result<_>>()?;
    let g1: Vec<SignalVector> = f1.iter().map(scale_signal).collect::<Result<_>>()?;
    let gap = projection_gap(&g0, &g1, gamma_dims)?;
    if gap <= 1e-12 {
        return Err(Error::NoSeparation);
    }
    let centers = g0.iter().map(|s| restrict(s.coeffs(), gamma_dims)).collect();
    ProjectionTestSpec::new(gamma_dims.to_vec(), centers, gap / 2.0)
}

/// Reject (1) iff the projected observation is farther than `rho` from every
/// center.
pub fn projection_test(y: &[f64], spec: &ProjectionTestSpec) -> u8 {
    let py = restrict(y, &spec.gamma_dims);
    let dist = spec
        .centers
        .iter()
        .map(|c| euclid(&py, c))
        .fold(f64::INFINITY, f64::min);
    u8::from(dist > spec.rho)
}

/// Monte Carlo error estimates of a projection test.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorEstimate {
    pub alpha: f64,
    pub beta: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub replicas: usize,
}

/// Worst-case Monte Carlo errors of `spec`, with observations produced by
/// `simulate` (raw and whitened pipelines plug in here). Replica `r` of each
/// (side, member) task uses the stream `task_seed ^ r`.
pub fn estimate_projection_errors<F>(
    f0: &[SignalVector],
    f1: &[SignalVector],
    spec: &ProjectionTestSpec,
    replicas: usize,
    seed: u64,
    simulate: F,
) -> Result<ErrorEstimate>
where
    F: Fn(&SignalVector, &mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    if replicas < 100 {
        return Err(Error::InvalidParameter("replicas must be >= 100".into()));
    }
    if f0.is_empty() || f1.is_empty() {
        return Err(Error::EmptyInput("signal family".into()));
    }
    let mut worst = [0.0f64; 2];
    for (side, fam) in [(0u64, f0), (1u64, f1)] {
        for (mi, s) in fam.iter().enumerate() {
            let task = mix_seed(seed, &[side, mi as u64]);
            let wrong: u64 = (0..replicas as u64)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(task ^ r);
                    let y = simulate(s, &mut rng);
                    let reject = projection_test(&y, spec);
                    u64::from(reject == u8::from(side == 0))
                })
                .sum();
            let p = wrong as f64 / replicas as f64;
            worst[side as usize] = worst[side as usize].max(p);
        }
    }
    let reps = replicas as f64;
    Ok(ErrorEstimate {
        alpha: worst[0],
        beta: worst[1],
        stderr_a: (worst[0] * (1.0 - worst[0]) / reps).sqrt(),
        stderr_b: (worst[1] * (1.0 - worst[1]) / reps).sqrt(),
        replicas,
    })
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Type II error of the one-sided level-`alpha` test of `S=0` against
/// `S = a e_1`: `beta = Phi(z_{1-alpha} - a/epsilon)`.
pub fn one_sided_beta(a: f64, epsilon: f64, alpha: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter("need epsilon > 0 and alpha in (0,1)".into()));
    }
    let n = standard_normal();
    Ok(n.cdf(n.inverse_cdf(1.0 - alpha) - a / epsilon))
}

/// Monte Carlo `(alpha_hat, beta_hat)` of the same one-sided test,
/// rejecting when `Y_1 > epsilon * z_{1-alpha}`.
pub fn mc_one_sided(
    a: f64,
    epsilon: f64,
    alpha: f64,
    replicas: usize,
    seed: u64,
) -> Result<ErrorEstimate> {
    if !(epsilon > 0.0) || !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter("need epsilon > 0 and alpha in (0,1)".into()));
    }
    if replicas < 100 {
        return Err(Error::InvalidParameter("replicas must be >= 100".into()));
    }
    let threshold = epsilon * standard_normal().inverse_cdf(1.0 - alpha);
    let count = |mean: f64, side: u64, reject_is_wrong: bool| -> u64 {
        let task = mix_seed(seed, &[side]);
        (0..replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(task ^ r);
                let xi: f64 = StandardNormal.sample(&mut rng);
                let reject = mean + epsilon * xi > threshold;
                u64::from(reject == reject_is_wrong)
            })
            .sum()
    };
    let reps = replicas as f64;
    let ah = count(0.0, 0, true) as f64 / reps;
    let bh = count(a, 1, false) as f64 / reps;
    Ok(ErrorEstimate {
        alpha: ah,
        beta: bh,
        stderr_a: (ah * (1.0 - ah) / reps).sqrt(),
        stderr_b: (bh * (1.0 - bh) / reps).sqrt(),
        replicas,
    })
}

/// Second central moment of the uniform Bayes mixture likelihood ratio
/// `I_m = m^{-1} sum_j dP_{S_j}/dP_{S_0}`:
///
/// `E[(I_m - 1)^2] = m^{-2} sum_{j1,j2} exp{n <S_{j1}-S_0, S_{j2}-S_0> / eps^2} - 1`,
///
/// evaluated through log-sum-exp so orthogonal designs with large exponents
/// do not overflow.
pub fn gaussian_mixture_second_moment(
    s0: &SignalVector,
    family: &[SignalVector],
    epsilon: f64,
    n_effective: f64,
) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::EmptyInput("mixture family".into()));
    }
    if !(epsilon > 0.0) || !(n_effective > 0.0) {
        return Err(Error::InvalidParameter("need epsilon > 0 and n_effective > 0".into()));
    }
    let m = family.len();
    let diffs: Vec<Vec<f64>> = family
        .iter()
        .map(|s| {
            if s.dim() != s0.dim() {
                return Err(Error::DimensionMismatch { expected: s0.dim(), got: s.dim() });
            }
            Ok(s.coeffs().iter().zip(s0.coeffs()).map(|(&a, &b)| a - b).collect())
        })
        .collect::<Result<_>>()?;
    let inv_eps2 = n_effective / (epsilon * epsilon);
    let mut exponents = Vec::with_capacity(m * m);
    for d1 in &diffs {
        for d2 in &diffs {
            let dot: f64 = d1.iter().zip(d2).map(|(&x, &y)| x * y).sum();
            exponents.push(inv_eps2 * dot);
        }
    }
    let max = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + exponents.iter().map(|&t| (t - max).exp()).sum::<f64>().ln();
    Ok(((lse - 2.0 * (m as f64).ln()).exp() - 1.0).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_moments_and_determinism() {
        let model = SequenceModel::white(1.0, 3).unwrap();
        let zero = SignalVector::zero(3).unwrap();
        let replicas = 100_000;
        let mut sums = [0.0f64; 3];
        for r in 0..replicas {
            let y = simulate_observation(&zero, &model, 1000 + r).unwrap();
            for (s, v) in sums.iter_mut().zip(&y) {
                *s += v;
            }
        }
        for s in sums {
            // 4 sigma / sqrt(replicas)
            assert!((s / replicas as f64).abs() < 0.013, "mean = {}", s / replicas as f64);
        }
        let a = simulate_observation(&zero, &model, 7).unwrap();
        let b = simulate_observation(&zero, &model, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn observation_noiseless_limit_and_linearity() {
        let s = SignalVector::new(vec![1.0, -2.0]).unwrap();
        let model = SequenceModel::new(1e-9, vec![2.0, 3.0]).unwrap();
        let y = simulate_observation(&s, &model, 0).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-6);
        assert!((y[1] + 6.0).abs() < 1e-6);
    }

    #[test]
    fn whiten_examples() {
        assert_eq!(whiten(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        let s = whiten(&[1.0, 0.5, 1.0 / 3.0, 0.25], &[1.0; 4]).unwrap();
        assert_eq!(s, vec![1.0, 0.5, 1.0 / 3.0, 0.25]);
        let s = whiten(&[1.0], &[4.0]).unwrap();
        assert_eq!(s, vec![0.5]);
        assert!(whiten(&[1.0], &[0.0]).is_err());
        assert!(whiten(&[-1.0], &[1.0]).is_err());
    }

    #[test]
    fn projection_gap_examples() {
        let zero = SignalVector::zero(4).unwrap();
        let e1 = SignalVector::basis(4, 1, 1.0).unwrap();
        let e2 = SignalVector::basis(4, 2, 1.0).unwrap();
        assert_eq!(projection_gap(&[zero.clone()], &[e1.clone()], &[1]).unwrap(), 1.0);
        assert_eq!(projection_gap(&[zero.clone()], &[e2], &[1]).unwrap(), 0.0);
        let shell: Vec<SignalVector> =
            (1..=4).map(|j| SignalVector::basis(4, j, 0.7).unwrap()).collect();
        let g = projection_gap(&[zero], &shell, &[1, 2, 3, 4]).unwrap();
        assert!((g - 0.7).abs() < 1e-12);
    }

    #[test]
    fn projection_test_basics() {
        let spec = ProjectionTestSpec::new(vec![1, 2], vec![vec![0.0, 0.0]], 0.5).unwrap();
        assert_eq!(projection_test(&[0.0, 0.0, 9.0], &spec), 0);
        assert_eq!(projection_test(&[0.4, 0.4], &spec), 1);
        assert!(ProjectionTestSpec::new(vec![1, 1], vec![vec![0.0, 0.0]], 0.5).is_err());
    }

    #[test]
    fn one_sided_power_oracle() {
        // Phi(1.6449 - 2) = Phi(-0.3551)
        let b = one_sided_beta(1.0, 0.5, 0.05).unwrap();
        assert!((b - 0.3612).abs() < 1e-3, "beta = {b}");
        let est = mc_one_sided(1.0, 0.5, 0.05, 100_000, 21).unwrap();
        assert!((est.alpha - 0.05).abs() < 4.0 * est.stderr_a.max(7e-4));
        assert!((est.beta - b).abs() < 4.0 * est.stderr_b);
    }

    #[test]
    fn noiseless_limit_separated_families() {
        let zero = SignalVector::zero(2).unwrap();
        let alt = SignalVector::new(vec![1.0, 0.5]).unwrap();
        let scales = vec![1.0, 1.0];
        let spec =
            build_projection_test(&[zero.clone()], &[alt.clone()], &[1, 2], &scales).unwrap();
        let model = SequenceModel::new(1e-6, scales).unwrap();
        let est = estimate_projection_errors(
            &[zero],
            &[alt],
            &spec,
            10_000,
            3,
            |s, rng| observe(s, &model, rng),
        )
        .unwrap();
        assert_eq!(est.alpha, 0.0);
        assert_eq!(est.beta, 0.0);
    }

    #[test]
    fn whitening_invariance_of_error_estimates() {
        // raw (A,R) simulation whitened per observation vs direct whitened
        // simulation: identical laws, independent seeds
        let a_diag = vec![1.0, 0.5, 0.25];
        let r_diag = vec![1.0, 4.0, 0.25];
        let epsilon = 0.4;
        let scales = whiten(&a_diag, &r_diag).unwrap();
        let zero = SignalVector::zero(3).unwrap();
        let alt = SignalVector::new(vec![1.0, 1.0, 0.0]).unwrap();
        let spec =
            build_projection_test(&[zero.clone()], &[alt.clone()], &[1, 2, 3], &scales).unwrap();
        let model = SequenceModel::new(epsilon, scales.clone()).unwrap();
        let raw = estimate_projection_errors(
            &[zero.clone()],
            &[alt.clone()],
            &spec,
            40_000,
            101,
            |s, rng| {
                let y = observe_illposed(s, &a_diag, &r_diag, epsilon, rng).unwrap();
                whiten_observation(&y, &r_diag).unwrap()
            },
        )
        .unwrap();
        let white = estimate_projection_errors(
            &[zero],
            &[alt],
            &spec,
            40_000,
            202,
            |s, rng| observe(s, &model, rng),
        )
        .unwrap();
        let tol_a = 4.0 * (raw.stderr_a.powi(2) + white.stderr_a.powi(2)).sqrt();
        let tol_b = 4.0 * (raw.stderr_b.powi(2) + white.stderr_b.powi(2)).sqrt();
        assert!((raw.alpha - white.alpha).abs() <= tol_a.max(1e-3));
        assert!((raw.beta - white.beta).abs() <= tol_b.max(1e-3));
    }

    #[test]
    fn bounded_scales_preserve_gap_positivity() {
        // Theorem-13-style sandwich: with scales in [c, C], the scaled gap is
        // zero exactly when the unscaled gap is zero
        let zero = SignalVector::zero(4).unwrap();
        let scales = vec![0.5, 2.0, 1.5, 0.8];
        for alt in [
            SignalVector::basis(4, 2, 0.3).unwrap(),
            SignalVector::zero(4).unwrap(),
        ] {
            let plain = projection_gap(&[zero.clone()], &[alt.clone()], &[1, 2, 3, 4]).unwrap();
            let scaled_alt = SignalVector::new(
                alt.coeffs().iter().zip(&scales).map(|(&c, &a)| c * a).collect(),
            )
            .unwrap();
            let scaled =
                projection_gap(&[zero.clone()], &[scaled_alt], &[1, 2, 3, 4]).unwrap();
            assert_eq!(plain > 0.0, scaled > 0.0);
        }
    }

    #[test]
    fn mixture_second_moment_closed_forms() {
        let s0 = SignalVector::zero(8).unwrap();
        // family = {S0} -> I_m is identically 1
        assert_eq!(
            gaussian_mixture_second_moment(&s0, &[s0.clone()], 1.0, 1.0).unwrap(),
            0.0
        );
        // m orthogonal signals at squared distance v: (e^{v/eps^2} - 1)/m
        let eps = 0.7;
        let v = eps * eps;
        let fam: Vec<SignalVector> =
            (1..=8).map(|j| SignalVector::basis(8, j, eps).unwrap()).collect();
        let got = gaussian_mixture_second_moment(&s0, &fam, eps, 1.0).unwrap();
        let want = ((v / (eps * eps)).exp() - 1.0) / 8.0;
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn mixture_second_moment_collapse() {
        // non-increasing in m for orthogonal designs, -> 0
        let eps = 1.0;
        let mut prev = f64::INFINITY;
        for m in [2usize, 4, 8, 16, 32] {
            let s0 = SignalVector::zero(m).unwrap();
            let fam: Vec<SignalVector> =
                (1..=m).map(|j| SignalVector::basis(m, j, 1.0).unwrap()).collect();
            let v = gaussian_mixture_second_moment(&s0, &fam, eps, 1.0).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!(prev < (1f64.exp() - 1.0) / 16.0);
    }

    #[test]
    fn epsilon_grid_consistency() {
        // errors vanish along the epsilon grid for separated families
        let zero = SignalVector::zero(2).unwrap();
        let alt = SignalVector::new(vec![1.0, 0.0]).unwrap();
        let scales = vec![1.0, 1.0];
        let spec =
            build_projection_test(&[zero.clone()], &[alt.clone()], &[1], &scales).unwrap();
        let mut worst_prev = 1.0;
        for eps in [1.0, 0.5, 0.25, 0.1, 0.05] {
            let model = SequenceModel::new(eps, scales.clone()).unwrap();
            let est = estimate_projection_errors(
                &[zero.clone()],
                &[alt.clone()],
                &spec,
                5_000,
                eps.to_bits(),
                |s, rng| observe(s, &model, rng),
            )
            .unwrap();
            let worst = est.alpha.max(est.beta);
            assert!(worst <= worst_prev + 0.03, "eps = {eps}");
            worst_prev = worst;
        }
        assert!(worst_prev < 1e-3);
    }
}
