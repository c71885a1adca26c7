use brjuno_core::cf::{ratio, CFNumber};
use brjuno_core::quadrature::{haar_cwt, local_oscillation};
use brjuno_core::regularity::{compare_p_exponents, estimate_p_exponent, modulus_fit};
use brjuno_core::xspec::parse;
use proptest::prelude::*;

fn third() -> CFNumber {
    CFNumber::from_rational(&ratio(1, 3)).unwrap()
}

#[test]
fn oscillation_at_rationals_tends_to_log2_over_q() {
    // ln(ρ/|x − p/q|) is exponential on the window
    for (x, q) in [(third(), 3.0), (CFNumber::from_rational(&ratio(2, 5)).unwrap(), 5.0)] {
        for j in [12, 14, 16] {
            let m = local_oscillation(&x, 2f64.powi(-j), 1.0, None).unwrap();
            let expect = 2f64.ln() / q;
            assert!((m.value - expect).abs() <= 0.01 * expect, "q {q}, j {j}: {}", m.value);
        }
    }
}

#[test]
fn rational_exponent_is_flat() {
    let e = estimate_p_exponent(&third(), 1.0, 10, 16).unwrap();
    assert!(e.slope.abs() <= 0.05, "{}", e.slope);
}

#[test]
fn haar_bounded_by_oscillation() {
    let x = third();
    for j in [8, 11, 14] {
        let a = 2f64.powi(-j);
        let c = haar_cwt(a, &ratio(1, 3)).unwrap();
        let m = local_oscillation(&x, a, 1.0, None).unwrap();
        assert!(c.value.abs() <= 2.0 * (m.value + m.error_estimate) + c.error_estimate, "j {j}");
    }
}

#[test]
fn exponent_does_not_increase_with_p() {
    let x = CFNumber::random(11, 200);
    let c = compare_p_exponents(&x, 8, 14).unwrap();
    assert!(c.p2.slope <= c.p1.slope + 0.05, "{} vs {}", c.p2.slope, c.p1.slope);
}

#[test]
fn modulus_order_separates_tau4_from_golden() {
    // every admissible scale, so the fit spans the q₃ = 731 resonance
    let golden = modulus_fit(&parse("golden").unwrap().number, 4, 22).unwrap();
    let tau4 = modulus_fit(&parse("tau:4").unwrap().number, 4, 22).unwrap();
    assert!((1.35..=1.65).contains(&golden.slope), "golden {}", golden.slope);
    assert!(tau4.slope < 1.4, "tau:4 {}", tau4.slope);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn l2_oscillation_dominates_l1(seed in 0u64..1000, j in 6i32..20) {
        let x = CFNumber::random(seed, 200);
        let rho = 2f64.powi(-j);
        let m1 = local_oscillation(&x, rho, 1.0, None).unwrap();
        let m2 = local_oscillation(&x, rho, 2.0, None).unwrap();
        prop_assert!(m2.value >= m1.value * (1.0 - 1e-12));
    }
}
