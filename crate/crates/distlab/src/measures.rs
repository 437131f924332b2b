//! Discretized measures on the unit interval.
//!
//! Everything downstream works with finite nonnegative measures on `[0, 1)`
//! split into `2^k` equal cells. A cell stores its total mass, so a measure
//! is just a weight vector; densities relative to the uniform reference are
//! `weight * n_cells`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for mass and simplex checks.
pub const MASS_TOL: f64 = 1e-12;

/// A finite nonnegative measure on `[0,1)` with `n_cells` equal cells.
///
/// Plays every measure role in the library: probability laws, Poisson mean
/// measures, intensities, and densities (via [`GridMeasure::density`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    n_cells: usize,
    weights: Vec<f64>,
    #[serde(skip)]
    #[serde(default)]
    mass: f64,
}

impl GridMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let n_cells = weights.len();
        if n_cells == 0 || !n_cells.is_power_of_two() {
            return Err(Error::InvalidMeasure(format!(
                "n_cells must be a positive power of two, got {n_cells}"
            )));
        }
        for (c, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {w} at cell {c}")));
            }
        }
        let mass = weights.iter().sum();
        Ok(Self { n_cells, weights, mass })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: GridMeasure = serde_json::from_str(text)?;
        Self::new(raw.weights)
    }

    /// The uniform probability measure.
    pub fn uniform(n_cells: usize) -> Self {
        Self::new(vec![1.0 / n_cells as f64; n_cells]).expect("uniform is valid")
    }

    /// All mass in a single cell.
    pub fn point_mass(n_cells: usize, cell: usize) -> Result<Self> {
        if cell >= n_cells {
            return Err(Error::IndexOutOfRange { index: cell, n_cells });
        }
        let mut w = vec![0.0; n_cells];
        w[cell] = 1.0;
        Self::new(w)
    }

    /// Constant intensity `level` (total mass `level`).
    pub fn constant(n_cells: usize, level: f64) -> Result<Self> {
        Self::new(vec![level / n_cells as f64; n_cells])
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn is_probability(&self) -> bool {
        (self.mass - 1.0).abs() <= MASS_TOL.max(MASS_TOL * self.mass.abs())
    }

    /// Density of cell `c` relative to the uniform reference measure.
    pub fn density(&self, c: usize) -> f64 {
        self.weights[c] * self.n_cells as f64
    }

    fn require_probability(&self) -> Result<()> {
        if self.is_probability() {
            Ok(())
        } else {
            Err(Error::NotProbability(self.mass))
        }
    }
}

/// A union of grid cells, the discrete stand-in for a Borel set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DyadicSet {
    cells: Vec<usize>,
}

impl DyadicSet {
    /// Builds from arbitrary indices; sorts and rejects duplicates.
    pub fn new(mut cells: Vec<usize>) -> Result<Self> {
        cells.sort_unstable();
        if cells.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("duplicate cell index in set".into()));
        }
        Ok(Self { cells })
    }

    /// The empty set.
    pub fn empty() -> Self {
        Self { cells: Vec::new() }
    }

    /// The dyadic interval `[j 2^-r, (j+1) 2^-r)` on a grid with `n_cells` cells.
    pub fn interval(n_cells: usize, resolution: u32, index: usize) -> Result<Self> {
        let parts = 1usize << resolution;
        if parts > n_cells {
            return Err(Error::InvalidParameter(format!(
                "resolution {resolution} exceeds grid with {n_cells} cells"
            )));
        }
        if index >= parts {
            return Err(Error::IndexOutOfRange { index, n_cells: parts });
        }
        let width = n_cells / parts;
        Ok(Self { cells: (index * width..(index + 1) * width).collect() })
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// A finite family of measures on one shared grid.
///
/// Either all members are probability measures or all are general finite
/// measures; the flag records which.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityFamily {
    members: Vec<GridMeasure>,
    probability: bool,
}

impl DensityFamily {
    pub fn new(members: Vec<GridMeasure>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::EmptyInput("density family".into()))?;
        let n_cells = first.n_cells();
        let probability = first.is_probability();
        for m in &members {
            if m.n_cells() != n_cells {
                return Err(Error::GridMismatch(n_cells, m.n_cells()));
            }
            if m.is_probability() != probability {
                return Err(Error::InvalidMeasure(
                    "family mixes probability and general finite measures".into(),
                ));
            }
        }
        Ok(Self { members, probability })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            members: Vec<GridMeasure>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        let members = raw
            .members
            .into_iter()
            .map(|m| GridMeasure::new(m.weights))
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }

    pub fn members(&self) -> &[GridMeasure] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_cells(&self) -> usize {
        self.members[0].n_cells()
    }

    pub fn is_probability(&self) -> bool {
        self.probability
    }
}

fn check_same_grid(p: &GridMeasure, q: &GridMeasure) -> Result<()> {
    if p.n_cells() != q.n_cells() {
        return Err(Error::GridMismatch(p.n_cells(), q.n_cells()));
    }
    Ok(())
}

/// Total variation distance `var(P,Q) = 1/2 * sum_c |P_c - Q_c|`.
pub fn total_variation(p: &GridMeasure, q: &GridMeasure) -> Result<f64> {
    check_same_grid(p, q)?;
    let s: f64 = p
        .weights()
        .iter()
        .zip(q.weights())
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    Ok(0.5 * s)
}

/// `P(B)` for a union of cells.
pub fn measure_of_set(p: &GridMeasure, b: &DyadicSet) -> Result<f64> {
    let mut total = 0.0;
    for &c in b.cells() {
        if c >= p.n_cells() {
            return Err(Error::IndexOutOfRange { index: c, n_cells: p.n_cells() });
        }
        total += p.weights()[c];
    }
    Ok(total)
}

/// Convex combination of family members, cell-wise.
pub fn mixture(family: &DensityFamily, weights: &[f64]) -> Result<GridMeasure> {
    if weights.len() != family.len() {
        return Err(Error::DimensionMismatch { expected: family.len(), got: weights.len() });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) || (sum - 1.0).abs() > MASS_TOL {
        return Err(Error::NotSimplex(format!("weights sum to {sum}")));
    }
    let n = family.n_cells();
    let mut out = vec![0.0; n];
    for (member, &w) in family.members().iter().zip(weights) {
        for (o, &m) in out.iter_mut().zip(member.weights()) {
            *o += w * m;
        }
    }
    GridMeasure::new(out)
}

/// `n` i.i.d. cell draws from a probability measure, by inverse CDF.
pub fn sample(p: &GridMeasure, n: usize, seed: u64) -> Result<Vec<usize>> {
    p.require_probability()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdf = cumulative(p);
    Ok((0..n).map(|_| draw_cell(&cdf, &mut rng)).collect())
}

pub(crate) fn cumulative(p: &GridMeasure) -> Vec<f64> {
    let mut acc = 0.0;
    p.weights()
        .iter()
        .map(|&w| {
            acc += w;
            acc
        })
        .collect()
}

pub(crate) fn draw_cell<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("nonempty cdf");
    let u: f64 = rng.gen::<f64>() * total;
    match cdf.binary_search_by(|probe| probe.partial_cmp(&u).expect("finite")) {
        Ok(i) | Err(i) => i.min(cdf.len() - 1),
    }
}

/// Largest discrepancy `|P(B) - Q(B)|` over unions of dyadic intervals at
/// resolution `r`.
///
/// Over unions (rather than single intervals) the value is monotone in `r`
/// and reaches `total_variation` at full resolution: the maximizing set is
/// the one collecting every interval where `P - Q` is positive, so the value
/// equals the sum of positive parts over the partition.
pub fn tau_discrepancy(p: &GridMeasure, q: &GridMeasure, resolution: u32) -> Result<f64> {
    check_same_grid(p, q)?;
    let n = p.n_cells();
    let parts = 1usize
        .checked_shl(resolution)
        .filter(|&parts| parts <= n)
        .ok_or_else(|| {
            Error::InvalidParameter(format!("resolution {resolution} too fine for {n} cells"))
        })?;
    let width = n / parts;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for j in 0..parts {
        let d: f64 = (j * width..(j + 1) * width)
            .map(|c| p.weights()[c] - q.weights()[c])
            .sum();
        if d > 0.0 {
            pos += d;
        } else {
            neg -= d;
        }
    }
    Ok(pos.max(neg))
}

/// Wasserstein-1 distance between probability measures on the grid,
/// `sum_c |F_P(c) - F_Q(c)| / n_cells`. Surrogate for the weak topology.
pub fn wasserstein1(p: &GridMeasure, q: &GridMeasure) -> Result<f64> {
    check_same_grid(p, q)?;
    p.require_probability()?;
    q.require_probability()?;
    let (cp, cq) = (cumulative(p), cumulative(q));
    let s: f64 = cp.iter().zip(&cq).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(s / p.n_cells() as f64)
}

/// The density `1 + sin(2*pi*i*x)` with exact cell integrals.
///
/// Cell `[a,b)` receives `(b-a) + (cos(2*pi*i*a) - cos(2*pi*i*b)) / (2*pi*i)`,
/// so the total mass is exactly 1 up to rounding.
pub fn sine_density(i: usize, n_cells: usize) -> Result<GridMeasure> {
    if i == 0 {
        return Err(Error::InvalidParameter("sine frequency must be >= 1".into()));
    }
    if !n_cells.is_power_of_two() || i > n_cells / 4 {
        return Err(Error::InvalidParameter(format!(
            "frequency {i} not resolvable on {n_cells} cells (need i <= n_cells/4)"
        )));
    }
    let nf = n_cells as f64;
    let two_pi_i = 2.0 * std::f64::consts::PI * i as f64;
    let weights = (0..n_cells)
        .map(|c| {
            let a = c as f64 / nf;
            let b = (c + 1) as f64 / nf;
            1.0 / nf + ((two_pi_i * a).cos() - (two_pi_i * b).cos()) / two_pi_i
        })
        .collect();
    GridMeasure::new(weights)
}

/// The alternative family of Example 2.1: `f_i = 1 + sin(2*pi*i*x)`, `i = 1..=m`.
pub fn sine_family(m: usize, n_cells: usize) -> Result<DensityFamily> {
    let members = (1..=m)
        .map(|i| sine_density(i, n_cells))
        .collect::<Result<Vec<_>>>()?;
    DensityFamily::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FRAC_1_PI: f64 = 1.0 / PI;

    #[test]
    fn tv_identity_and_disjoint() {
        let u = GridMeasure::uniform(8);
        assert_eq!(total_variation(&u, &u).unwrap(), 0.0);
        let p0 = GridMeasure::point_mass(8, 0).unwrap();
        let p1 = GridMeasure::point_mass(8, 1).unwrap();
        assert_eq!(total_variation(&p0, &p1).unwrap(), 1.0);
    }

    #[test]
    fn tv_uniform_vs_sine_is_one_over_pi() {
        // analytic oracle: 1/2 * int_0^1 |sin(2 pi x)| dx = 1/pi
        let u = GridMeasure::uniform(4096);
        let s = sine_density(1, 4096).unwrap();
        let tv = total_variation(&u, &s).unwrap();
        assert!((tv - FRAC_1_PI).abs() < 1e-3, "tv = {tv}");
    }

    #[test]
    fn tv_grid_mismatch_errors() {
        let u4 = GridMeasure::uniform(4);
        let u8 = GridMeasure::uniform(8);
        assert!(total_variation(&u4, &u8).is_err());
    }

    #[test]
    fn measure_of_set_basics() {
        let u = GridMeasure::uniform(8);
        let half = DyadicSet::interval(8, 1, 0).unwrap();
        assert!((measure_of_set(&u, &half).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(measure_of_set(&u, &DyadicSet::empty()).unwrap(), 0.0);
        let bad = DyadicSet::new(vec![9]).unwrap();
        assert!(measure_of_set(&u, &bad).is_err());
    }

    #[test]
    fn measure_of_half_under_sine() {
        // int_0^{1/2} (1 + sin 2 pi x) dx = 1/2 + 1/pi
        let s = sine_density(1, 4096).unwrap();
        let half = DyadicSet::interval(4096, 1, 0).unwrap();
        let v = measure_of_set(&s, &half).unwrap();
        assert!((v - (0.5 + FRAC_1_PI)).abs() < 1e-3, "v = {v}");
    }

    #[test]
    fn mixture_identity_and_average() {
        let u = GridMeasure::uniform(8);
        let p = GridMeasure::point_mass(8, 3).unwrap();
        let fam = DensityFamily::new(vec![u.clone(), p.clone()]).unwrap();
        let single = DensityFamily::new(vec![u.clone()]).unwrap();
        assert_eq!(mixture(&single, &[1.0]).unwrap(), u);
        let avg = mixture(&fam, &[0.5, 0.5]).unwrap();
        for c in 0..8 {
            let expect = 0.5 * u.weights()[c] + 0.5 * p.weights()[c];
            assert!((avg.weights()[c] - expect).abs() < 1e-15);
        }
        assert!(mixture(&fam, &[0.7, 0.7]).is_err());
        assert!(mixture(&fam, &[-0.5, 1.5]).is_err());
    }

    #[test]
    fn sine_mixture_tv_bound() {
        // L1 <= L2: tv(mean of m sines, uniform) <= (2m)^{-1/2}
        let m = 1024;
        let fam = sine_family(m, 4096).unwrap();
        let w = vec![1.0 / m as f64; m];
        let mix = mixture(&fam, &w).unwrap();
        let tv = total_variation(&mix, &GridMeasure::uniform(4096)).unwrap();
        let bound = (2.0 * m as f64).powf(-0.5);
        assert!(tv <= bound, "tv = {tv}, bound = {bound}");
    }

    #[test]
    fn sample_point_mass_and_determinism() {
        let p = GridMeasure::point_mass(8, 3).unwrap();
        assert_eq!(sample(&p, 5, 17).unwrap(), vec![3, 3, 3, 3, 3]);
        let u = GridMeasure::uniform(16);
        assert_eq!(sample(&u, 100, 42).unwrap(), sample(&u, 100, 42).unwrap());
        assert_eq!(sample(&u, 0, 1).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn sample_law_of_large_numbers() {
        let u = GridMeasure::uniform(2);
        let xs = sample(&u, 1_000_000, 7).unwrap();
        let freq0 = xs.iter().filter(|&&c| c == 0).count() as f64 / 1e6;
        // binomial 4 sigma band
        assert!((freq0 - 0.5).abs() < 0.002, "freq0 = {freq0}");
    }

    #[test]
    fn sample_rejects_non_probability() {
        let two = GridMeasure::constant(4, 2.0).unwrap();
        assert!(sample(&two, 10, 0).is_err());
    }

    #[test]
    fn tau_discrepancy_basics() {
        let u = GridMeasure::uniform(4096);
        let s1 = sine_density(1, 4096).unwrap();
        assert_eq!(tau_discrepancy(&s1, &s1, 3).unwrap(), 0.0);
        let t = tau_discrepancy(&u, &s1, 1).unwrap();
        assert!((t - FRAC_1_PI).abs() < 1e-3, "t = {t}");
        // high frequency vanishes at coarse resolution: full periods per interval
        let s256 = sine_density(256, 4096).unwrap();
        assert!(tau_discrepancy(&u, &s256, 3).unwrap() <= 1e-3);
        assert!(tau_discrepancy(&u, &s1, 15).is_err());
    }

    #[test]
    fn tau_bounded_by_twice_tv_and_monotone() {
        let u = GridMeasure::uniform(256);
        let s = sine_density(3, 256).unwrap();
        let tv = total_variation(&u, &s).unwrap();
        let mut prev = 0.0;
        for r in 0..=8 {
            let t = tau_discrepancy(&u, &s, r).unwrap();
            assert!(t <= 2.0 * tv + 1e-12);
            assert!(t + 1e-12 >= prev, "not monotone at r = {r}");
            prev = t;
        }
    }

    #[test]
    fn wasserstein_translation() {
        let n = 256;
        let p = GridMeasure::point_mass(n, n / 4).unwrap();
        let q = GridMeasure::point_mass(n, 3 * n / 4).unwrap();
        let w = wasserstein1(&p, &q).unwrap();
        assert!((w - 0.5).abs() <= 1.0 / n as f64 + 1e-12);
        assert_eq!(wasserstein1(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn wasserstein_sine_decay() {
        // |int_0^x sin(2 pi i t) dt| <= 1/(pi i)
        let n = 1024;
        let u = GridMeasure::uniform(n);
        for i in [1usize, 4, 16, 64] {
            let s = sine_density(i, n).unwrap();
            let w = wasserstein1(&u, &s).unwrap();
            assert!(w <= 1.0 / (PI * i as f64) + 2.0 / n as f64, "i = {i}, w = {w}");
        }
    }

    #[test]
    fn sine_density_cells_and_mass() {
        let s = sine_density(1, 4).unwrap();
        // first cell: 1/4 + (cos 0 - cos(pi/2)) / (2 pi)
        let expect = 0.25 + (1.0 - (PI / 2.0).cos()) / (2.0 * PI);
        assert!((s.weights()[0] - expect).abs() < 1e-14);
        for i in [1usize, 2, 7, 64] {
            let s = sine_density(i, 1024).unwrap();
            assert!((s.mass() - 1.0).abs() < 1e-12, "i = {i}");
        }
        // periodicity: i=2 on 8 cells repeats with shift 4
        let s2 = sine_density(2, 8).unwrap();
        for c in 0..4 {
            assert!((s2.weights()[c] - s2.weights()[c + 4]).abs() < 1e-15);
        }
        assert!(sine_density(3, 8).is_err());
        assert!(sine_density(0, 8).is_err());
    }

    #[test]
    fn example21_dichotomy() {
        // tv stays pinned at 1/pi while the coarse-resolution discrepancy
        // vanishes along the subsequence of frequencies divisible by 8
        let n = 4096;
        let u = GridMeasure::uniform(n);
        for i in [1usize, 8, 64, 512, 1024] {
            let s = sine_density(i, n).unwrap();
            let tv = total_variation(&u, &s).unwrap();
            assert!((tv - FRAC_1_PI).abs() < 1e-3, "i = {i}, tv = {tv}");
        }
        for i in [8usize, 64, 512, 1024] {
            let s = sine_density(i, n).unwrap();
            assert!(tau_discrepancy(&u, &s, 3).unwrap() <= 1e-12, "i = {i}");
        }
    }

    #[test]
    fn grid_measure_validation() {
        assert!(GridMeasure::new(vec![]).is_err());
        assert!(GridMeasure::new(vec![0.5; 3]).is_err());
        assert!(GridMeasure::new(vec![0.5, -0.5]).is_err());
        assert!(GridMeasure::new(vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn dyadic_set_validation() {
        assert!(DyadicSet::new(vec![3, 1, 3]).is_err());
        let s = DyadicSet::new(vec![3, 1, 2]).unwrap();
        assert_eq!(s.cells(), &[1, 2, 3]);
        assert!(DyadicSet::interval(8, 4, 0).is_err());
    }

    #[test]
    fn family_validation() {
        assert!(DensityFamily::new(vec![]).is_err());
        let mixed = vec![GridMeasure::uniform(8), GridMeasure::constant(8, 2.0).unwrap()];
        assert!(DensityFamily::new(mixed).is_err());
        let grids = vec![GridMeasure::uniform(8), GridMeasure::uniform(16)];
        assert!(DensityFamily::new(grids).is_err());
    }

    #[test]
    fn mixture_linearity_on_sets() {
        let fam = sine_family(3, 64).unwrap();
        let w = [0.2, 0.3, 0.5];
        let mix = mixture(&fam, &w).unwrap();
        let b = DyadicSet::interval(64, 2, 1).unwrap();
        let direct = measure_of_set(&mix, &b).unwrap();
        let linear: f64 = fam
            .members()
            .iter()
            .zip(w)
            .map(|(m, wi)| wi * measure_of_set(m, &b).unwrap())
            .sum();
        assert!((direct - linear).abs() < 1e-12);
    }
}
