//! Property-based invariants over randomly generated measures.

use distlab::deconvolve::{convolve, Kernel};
use distlab::kraft::hull_min_tv;
use distlab::measures::{
    mixture, sample, tau_discrepancy, total_variation, wasserstein1, DensityFamily, GridMeasure,
};
use proptest::prelude::*;

const CELLS: usize = 32;

fn probability() -> impl Strategy<Value = GridMeasure> {
    prop::collection::vec(1e-6..1.0f64, CELLS).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        GridMeasure::new(raw.into_iter().map(|w| w / total).collect()).expect("valid weights")
    })
}

fn simplex(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6..1.0f64, m).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_is_a_metric((p, q, r) in (probability(), probability(), probability())) {
        let d_pq = total_variation(&p, &q).unwrap();
        let d_qp = total_variation(&q, &p).unwrap();
        let d_pp = total_variation(&p, &p).unwrap();
        let d_pr = total_variation(&p, &r).unwrap();
        let d_rq = total_variation(&r, &q).unwrap();
        prop_assert!((d_pq - d_qp).abs() < 1e-15);
        prop_assert!(d_pp.abs() < 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d_pq));
        prop_assert!(d_pq <= d_pr + d_rq + 1e-12);
    }

    #[test]
    fn tau_is_dominated_by_tv((p, q) in (probability(), probability())) {
        let tv = total_variation(&p, &q).unwrap();
        for r in 0..=5u32 {
            let tau = tau_discrepancy(&p, &q, r).unwrap();
            prop_assert!(tau <= tv + 1e-12);
        }
        // at full resolution the discrepancy recovers total variation
        let full = tau_discrepancy(&p, &q, CELLS.trailing_zeros()).unwrap();
        prop_assert!((full - tv).abs() < 1e-12);
    }

    #[test]
    fn tau_is_monotone_in_resolution((p, q) in (probability(), probability())) {
        let mut prev = 0.0;
        for r in 0..=5u32 {
            let tau = tau_discrepancy(&p, &q, r).unwrap();
            prop_assert!(tau + 1e-12 >= prev);
            prev = tau;
        }
    }

    #[test]
    fn wasserstein_is_dominated_by_tv((p, q) in (probability(), probability())) {
        let w = wasserstein1(&p, &q).unwrap();
        let tv = total_variation(&p, &q).unwrap();
        prop_assert!(w >= -1e-15);
        prop_assert!(w <= tv + 1e-12);
    }

    #[test]
    fn convolution_preserves_mass_and_positivity(p in probability(), sigma in 0.02..0.3f64) {
        for kernel in [Kernel::gauss(CELLS, sigma).unwrap(), Kernel::uniform(CELLS).unwrap()] {
            let g = convolve(&kernel, &p).unwrap();
            prop_assert!((g.mass() - p.mass()).abs() < 1e-10);
            prop_assert!(g.weights().iter().all(|&w| w >= 0.0));
        }
        let identity = Kernel::point(CELLS).unwrap();
        let same = convolve(&identity, &p).unwrap();
        for (a, b) in same.weights().iter().zip(p.weights()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_contracts_tv((p, q) in (probability(), probability()), sigma in 0.02..0.3f64) {
        let kernel = Kernel::gauss(CELLS, sigma).unwrap();
        let before = total_variation(&p, &q).unwrap();
        let after = total_variation(
            &convolve(&kernel, &p).unwrap(),
            &convolve(&kernel, &q).unwrap(),
        ).unwrap();
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn sampling_is_seed_deterministic(p in probability(), seed in any::<u64>()) {
        let a = sample(&p, 100, seed).unwrap();
        let b = sample(&p, 100, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn hull_distance_is_bounded_by_mixture_distances(
        (ps, qs) in (prop::collection::vec(probability(), 2), prop::collection::vec(probability(), 2)),
        (wp, wq) in (simplex(2), simplex(2)),
    ) {
        let f0 = DensityFamily::new(ps).unwrap();
        let f1 = DensityFamily::new(qs).unwrap();
        let hull = hull_min_tv(&f0, &f1, 1e-6).unwrap();
        prop_assert!(hull.value >= -1e-9);
        // any pair of mixtures upper-bounds the hull distance
        let tv = total_variation(&mixture(&f0, &wp).unwrap(), &mixture(&f1, &wq).unwrap()).unwrap();
        prop_assert!(hull.value <= tv + 1e-6);
        // and the optimizer's own mixtures attain its reported value
        let attained = total_variation(
            &mixture(&f0, &hull.weights0).unwrap(),
            &mixture(&f1, &hull.weights1).unwrap(),
        ).unwrap();
        prop_assert!((attained - hull.value).abs() < 1e-6);
    }
}
