use brjuno_core::spectrum::{
    analytic_spectrum, empirical_spectrum, homogeneity_check, jarnik_dim, Dim, BIN_WIDTH, DEFAULT_SCALE_J, N_BINS,
};
use proptest::prelude::*;

#[test]
fn spectrum_is_homogeneous_across_subintervals() {
    let h = homogeneity_check(256, 60, DEFAULT_SCALE_J, 5).unwrap();
    assert!(h.holds, "max deviation {}", h.max_deviation);
}

#[test]
fn every_sample_is_accounted_for() {
    let s = empirical_spectrum(64, 40, 13, 9).unwrap();
    let binned: usize = s.bins.iter().map(|b| b.count).sum();
    assert_eq!(binned + s.underflow + s.overflow + s.failures, s.n_samples);
    assert_eq!(s.bins.len(), N_BINS);
    assert_eq!(s.estimates.len(), 64);
    for (i, b) in s.bins.iter().enumerate() {
        assert!((b.h_center - (i as f64 + 0.5) * BIN_WIDTH).abs() < 1e-12);
    }
    assert_ne!(s, empirical_spectrum(64, 40, 13, 10).unwrap());
}

proptest! {
    #[test]
    fn analytic_spectrum_is_nondecreasing(a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(analytic_spectrum(lo).to_f64() <= analytic_spectrum(hi).to_f64());
        prop_assert!(analytic_spectrum(hi).to_f64() <= 1.0);
    }

    #[test]
    fn jarnik_and_spectrum_agree(tau in 2.0f64..1e9) {
        prop_assert_eq!(analytic_spectrum(1.0 / tau), Dim::Finite(jarnik_dim(tau).unwrap()));
    }
}
