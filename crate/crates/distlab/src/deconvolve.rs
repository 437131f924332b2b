//! Deconvolution testing: hypotheses on `f` observed through `g * f`.
//!
//! Convolution is circular on the torus `[0,1)`, acting on cell weights as
//! `(g*f)[c] = sum_d g[d] f[(c-d) mod N]`, so the discrete Fourier transform
//! turns it into coordinate-wise multiplication: `(g*f)^ = g^ * f^` exactly.
//! Distinguishability of lifted families `{g*f : f in F}` therefore matches
//! that of the originals whenever `|g^|` stays away from zero on the band
//! the families live in.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kraft::{certify, CertifyConfig, Verdict, VerdictKind};
use crate::measures::{DensityFamily, GridMeasure};

/// A known noise density with its Fourier magnitudes `|g^(k)|`,
/// `k = 0 ..= N/2`.
#[derive(Debug, Clone, Serialize)]
pub struct Kernel {
    g: GridMeasure,
    fourier_mags: Vec<f64>,
}

impl Kernel {
    pub fn new(g: GridMeasure) -> Result<Self> {
        if !g.is_probability() {
            return Err(Error::NotProbability(g.mass()));
        }
        let fourier_mags = dft_magnitudes(g.weights());
        if (fourier_mags[0] - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!(
                "kernel transform at frequency 0 is {}, expected 1",
                fourier_mags[0]
            )));
        }
        Ok(Self { g, fourier_mags })
    }

    /// Identity kernel: a point mass at 0.
    pub fn point(n_cells: usize) -> Result<Self> {
        Self::new(GridMeasure::point_mass(n_cells, 0)?)
    }

    /// Total smoothing: the uniform density (kills every nonzero frequency).
    pub fn uniform(n_cells: usize) -> Result<Self> {
        Self::new(GridMeasure::uniform(n_cells))
    }

    /// Wrapped Gaussian with standard deviation `sigma`;
    /// `|g^(k)| ~ exp(-sigma^2 (2 pi k)^2 / 2)`.
    pub fn gauss(n_cells: usize, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        let nf = n_cells as f64;
        let mut w = vec![0.0; n_cells];
        for (c, wc) in w.iter_mut().enumerate() {
            let x = (c as f64 + 0.5) / nf;
            // wrap enough copies to cover the mass of the real-line Gaussian
            let reach = (6.0 * sigma).ceil() as i64 + 1;
            for m in -reach..=reach {
                let d = x + m as f64;
                *wc += (-d * d / (2.0 * sigma * sigma)).exp();
            }
        }
        let total: f64 = w.iter().sum();
        for wc in w.iter_mut() {
            *wc /= total;
        }
        Self::new(GridMeasure::new(w)?)
    }

    pub fn density(&self) -> &GridMeasure {
        &self.g
    }

    pub fn fourier_mags(&self) -> &[f64] {
        &self.fourier_mags
    }

    pub fn n_cells(&self) -> usize {
        self.g.n_cells()
    }
}

/// `|sum_c w_c e^{-2 pi i k c / N}|` for `k = 0 ..= N/2` (direct summation).
fn dft_magnitudes(weights: &[f64]) -> Vec<f64> {
    let n = weights.len();
    let base = -2.0 * std::f64::consts::PI / n as f64;
    (0..=n / 2)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (c, &w) in weights.iter().enumerate() {
                let phase = base * (k * c) as f64;
                re += w * phase.cos();
                im += w * phase.sin();
            }
            (re * re + im * im).sqrt()
        })
        .collect()
}

/// Circular convolution of cell weights; preserves mass and nonnegativity.
pub fn convolve(kernel: &Kernel, f: &GridMeasure) -> Result<GridMeasure> {
    let n = f.n_cells();
    if kernel.n_cells() != n {
        return Err(Error::GridMismatch(kernel.n_cells(), n));
    }
    let g = kernel.density().weights();
    let fw = f.weights();
    let mut out = vec![0.0; n];
    for (d, &gd) in g.iter().enumerate() {
        if gd == 0.0 {
            continue;
        }
        for (c, o) in out.iter_mut().enumerate() {
            *o += gd * fw[(c + n - d) % n];
        }
    }
    GridMeasure::new(out)
}

/// Minimum `|g^(k)|` over `k = 0 ..= band`; 0 signals that the invertibility
/// hypothesis fails on the band.
pub fn check_kernel_invertibility(kernel: &Kernel, band: usize) -> Result<f64> {
    if band > kernel.n_cells() / 2 {
        return Err(Error::InvalidParameter(format!(
            "band {band} exceeds Nyquist {}",
            kernel.n_cells() / 2
        )));
    }
    Ok(kernel.fourier_mags[..=band]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Element-wise convolution of both families.
pub fn lift_families(
    f0: &DensityFamily,
    f1: &DensityFamily,
    kernel: &Kernel,
) -> Result<(DensityFamily, DensityFamily)> {
    let lift = |fam: &DensityFamily| -> Result<DensityFamily> {
        DensityFamily::new(
            fam.members()
                .iter()
                .map(|m| convolve(kernel, m))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    Ok((lift(f0)?, lift(f1)?))
}

#[derive(Debug, Clone, Copy)]
pub struct DeconvConfig {
    /// Frequencies `0..=band` on which invertibility is checked.
    pub band: usize,
    /// Minimum band magnitude below which the equivalence claim is withdrawn.
    pub floor: f64,
    pub certify: CertifyConfig,
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self { band: 4, floor: 1e-3, certify: CertifyConfig::default() }
    }
}

/// Verdicts before and after convolution, with the agreement flag of
/// the Theorem 14/15-style equivalence.
#[derive(Debug, Clone, Serialize)]
pub struct DeconvDecision {
    pub verdict_theta: Verdict,
    pub verdict_lambda: Verdict,
    pub agree: bool,
    pub min_band_magnitude: f64,
    /// False when the kernel dips below the floor on the band, in which case
    /// disagreement is expected rather than an error.
    pub invertible: bool,
}

/// Runs the certification pipeline on `(F0, F1)` and on the lifted families,
/// comparing the distinguishability outcomes.
pub fn deconv_decision(
    f0: &DensityFamily,
    f1: &DensityFamily,
    kernel: &Kernel,
    config: &DeconvConfig,
) -> Result<DeconvDecision> {
    let min_mag = check_kernel_invertibility(kernel, config.band)?;
    let (l0, l1) = lift_families(f0, f1, kernel)?;
    let verdict_theta = certify(f0, f1, &config.certify)?;
    let verdict_lambda = certify(&l0, &l1, &config.certify)?;
    let distinguishable =
        |v: &Verdict| v.kind == VerdictKind::SeparationCertificate;
    Ok(DeconvDecision {
        agree: distinguishable(&verdict_theta) == distinguishable(&verdict_lambda),
        min_band_magnitude: min_mag,
        invertible: min_mag >= config.floor,
        verdict_theta,
        verdict_lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{sine_density, total_variation};
    use std::f64::consts::PI;

    #[test]
    fn point_kernel_is_identity() {
        let k = Kernel::point(64).unwrap();
        let f = sine_density(2, 64).unwrap();
        let out = convolve(&k, &f).unwrap();
        for (a, b) in out.weights().iter().zip(f.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(k.fourier_mags().iter().all(|&m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn uniform_kernel_total_smoothing() {
        let k = Kernel::uniform(64).unwrap();
        let f = sine_density(3, 64).unwrap();
        let out = convolve(&k, &f).unwrap();
        let u = GridMeasure::uniform(64);
        for (a, b) in out.weights().iter().zip(u.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(check_kernel_invertibility(&k, 1).unwrap() < 1e-12);
    }

    #[test]
    fn gaussian_kernel_multiplier_action() {
        let sigma = 0.1;
        let n = 1024;
        let k = Kernel::gauss(n, sigma).unwrap();
        // |g^(2 pi)| = e^{-sigma^2 (2 pi)^2 / 2}
        let expect = (-sigma * sigma * (2.0 * PI).powi(2) / 2.0).exp();
        assert!((k.fourier_mags()[1] - expect).abs() < 1e-3, "mag = {}", k.fourier_mags()[1]);
        // convolving the sine density scales its oscillating part
        let f = sine_density(1, n).unwrap();
        let out = convolve(&k, &f).unwrap();
        let tv = total_variation(&out, &GridMeasure::uniform(n)).unwrap();
        assert!((tv - expect / PI).abs() < 2e-3, "tv = {tv}");
    }

    #[test]
    fn convolution_preserves_mass_and_commutes_with_mixture() {
        let k = Kernel::gauss(128, 0.07).unwrap();
        let fam = crate::measures::sine_family(3, 128).unwrap();
        let w = [0.5, 0.3, 0.2];
        let mixed = crate::measures::mixture(&fam, &w).unwrap();
        let conv_of_mix = convolve(&k, &mixed).unwrap();
        assert!((conv_of_mix.mass() - 1.0).abs() < 1e-12);
        assert!(conv_of_mix.weights().iter().all(|&x| x >= 0.0));
        let mut mix_of_conv = vec![0.0; 128];
        for (member, &wi) in fam.members().iter().zip(&w) {
            let cm = convolve(&k, member).unwrap();
            for (o, &v) in mix_of_conv.iter_mut().zip(cm.weights()) {
                *o += wi * v;
            }
        }
        for (a, &b) in conv_of_mix.weights().iter().zip(&mix_of_conv) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invertibility_band_values() {
        let sigma = 0.1;
        let k = Kernel::gauss(1024, sigma).unwrap();
        let expect = (-sigma * sigma * (8.0 * PI).powi(2) / 2.0).exp();
        let got = check_kernel_invertibility(&k, 4).unwrap();
        assert!((got - expect).abs() < 2e-3, "got = {got}, expect = {expect}");
        assert!(check_kernel_invertibility(&k, 10_000).is_err());
    }

    #[test]
    fn lift_scales_tv_by_multiplier() {
        let sigma = 0.1;
        let n = 1024;
        let k = Kernel::gauss(n, sigma).unwrap();
        let f0 = DensityFamily::new(vec![GridMeasure::uniform(n)]).unwrap();
        let f1 = DensityFamily::new(vec![sine_density(1, n).unwrap()]).unwrap();
        let (l0, l1) = lift_families(&f0, &f1, &k).unwrap();
        let tv = total_variation(&l0.members()[0], &l1.members()[0]).unwrap();
        let expect = (-sigma * sigma * (2.0 * PI).powi(2) / 2.0).exp() / PI;
        assert!((tv - expect).abs() < 2e-3, "tv = {tv}, expect = {expect}");
    }

    #[test]
    fn identity_kernel_leaves_families_unchanged() {
        let k = Kernel::point(64).unwrap();
        let f0 = DensityFamily::new(vec![GridMeasure::uniform(64)]).unwrap();
        let f1 = DensityFamily::new(vec![sine_density(1, 64).unwrap()]).unwrap();
        let (l0, l1) = lift_families(&f0, &f1, &k).unwrap();
        assert_eq!(l0.members()[0].weights(), f0.members()[0].weights());
        assert_eq!(l1.members()[0].weights(), f1.members()[0].weights());
    }

    #[test]
    fn decision_agrees_for_invertible_kernel() {
        let k = Kernel::gauss(64, 0.05).unwrap();
        let f0 = DensityFamily::new(vec![GridMeasure::uniform(64)]).unwrap();
        let f1 = DensityFamily::new(vec![sine_density(1, 64).unwrap()]).unwrap();
        let d = deconv_decision(&f0, &f1, &k, &DeconvConfig::default()).unwrap();
        assert!(d.invertible);
        assert!(d.agree);
        assert_eq!(d.verdict_theta.kind, VerdictKind::SeparationCertificate);
        assert_eq!(d.verdict_lambda.kind, VerdictKind::SeparationCertificate);
        // identical families agree on the trivial side too
        let same = deconv_decision(&f0, &f0, &k, &DeconvConfig::default()).unwrap();
        assert!(same.agree);
        assert_eq!(same.verdict_theta.kind, VerdictKind::IndistinguishableCertificate);
    }

    #[test]
    fn null_space_fixture_disagrees_with_warning() {
        // families differ only at a frequency the uniform kernel kills
        let k = Kernel::uniform(64).unwrap();
        let f0 = DensityFamily::new(vec![GridMeasure::uniform(64)]).unwrap();
        let f1 = DensityFamily::new(vec![sine_density(1, 64).unwrap()]).unwrap();
        let d = deconv_decision(&f0, &f1, &k, &DeconvConfig::default()).unwrap();
        assert!(!d.invertible);
        assert!(!d.agree);
        assert_eq!(d.verdict_theta.kind, VerdictKind::SeparationCertificate);
        assert_eq!(d.verdict_lambda.kind, VerdictKind::IndistinguishableCertificate);
    }
}
