use brjuno_core::cf::{convergents, ratio, CFNumber};
use brjuno_core::quadrature::{
    average_formula_bm, haar_cwt, integrate_b, integrate_b_with, integrate_terms, Interval, QuadOptions,
};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// `∫₀¹ B = Σₖ ∫₀¹ log(1/x)·(Pᵏ1)(x) dx` with `(Pf)(y) = Σₙ f(1/(n+y))/(n+y)³`,
/// from the functional equation; evaluated in 40-digit arithmetic with
/// `Pᵏ1` expanded in a degree-35 polynomial basis, where `P` acts through
/// Hurwitz zeta values.
const UNIT_PERIOD_INTEGRAL: f64 = 2.147_271_494_248_791;

#[test]
fn unit_period_matches_transfer_operator_oracle() {
    let r = integrate_b(&Interval::new(ratio(0, 1), ratio(1, 1)).unwrap(), 1e-3).unwrap();
    assert!(r.converged);
    let err = (r.value - UNIT_PERIOD_INTEGRAL).abs();
    assert!(err <= r.error_estimate, "error {err:e} vs estimate {:e}", r.error_estimate);
}

#[test]
fn node_offsets_agree_within_estimates() {
    let i = Interval::new(ratio(1, 4), ratio(3, 4)).unwrap();
    let a = integrate_b(&i, 1e-4).unwrap();
    let b = integrate_b_with(&i, 1e-4, &QuadOptions { offset: 0.3, ..Default::default() }).unwrap();
    let d = (a.value - b.value).abs();
    assert!(d <= 2.0 * (a.error_estimate + b.error_estimate), "{d:e}");
}

#[test]
fn terms_beyond_the_resolution_index_decay_geometrically() {
    let g = CFNumber::golden();
    let x0 = g.to_f64();
    let cv = convergents(&g, 40).unwrap();
    for rho in [1e-4, 1e-5] {
        let i = Interval::from_f64(x0 - rho / 2.0, x0 + rho / 2.0).unwrap();
        let t = integrate_terms(&i, 30, 4096).unwrap();
        // first index whose convergent resolves the window
        let k0 = (1..40)
            .find(|&k| cv.get(k).q.to_f64().unwrap().powi(2) * rho >= 0.5)
            .unwrap() as usize;
        for k in k0 + 1..=(k0 + 12).min(30) {
            let r = t[k] / t[k - 1];
            assert!(r <= 0.8, "rho {rho:e}: ratio {r} at k = {k} (K = {k0})");
        }
    }
}

#[test]
fn average_formula_residual_does_not_grow() {
    let half = ratio(1, 2);
    let mut scaled = Vec::new();
    for h in [1e-3, 1e-4, 1e-5] {
        let i = Interval::new(half.clone(), &half + BigRational::from_float(h).unwrap()).unwrap();
        let r = integrate_b(&i, 1e-5 * h).unwrap();
        let model = average_formula_bm(&half, h).unwrap();
        let scale = 2.0 * h * (1.0 / (4.0 * h)).ln();
        scaled.push((r.value / h - model).abs() / scale);
    }
    assert!(scaled.iter().all(|&s| s <= 1.0), "{scaled:?}");
    assert!(scaled[2] <= 2.5 * scaled[0], "{scaled:?}");
}

#[test]
fn average_formula_holds_on_the_left_with_signed_h() {
    let half = ratio(1, 2);
    for h in [1e-3, 1e-4, 1e-5] {
        let i = Interval::new(&half - BigRational::from_float(h).unwrap(), half.clone()).unwrap();
        let r = integrate_b(&i, 1e-5 * h).unwrap();
        let model = average_formula_bm(&half, -h).unwrap();
        let scale = 2.0 * h * (1.0 / (4.0 * h)).ln();
        let s = (r.value / h - model).abs() / scale;
        assert!(s <= 1.0, "h = {h:e}: scaled residual {s}");
    }
}

#[test]
fn haar_coefficient_at_one_half() {
    let a = 1e-4;
    let c = haar_cwt(a, &ratio(1, 2)).unwrap();
    let bound = 10.0 * 2.0 * a * (1.0 / (4.0 * a)).ln();
    assert!((c.value - 2f64.ln() / 2.0).abs() <= bound + c.error_estimate);
}

fn random_averages(rng: &mut ChaCha20Rng, n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            let len = 10f64.powf(-rng.random_range(0.3..6.0));
            let lo = rng.random_range(0.0..1.0 - len);
            let r = integrate_b(&Interval::from_f64(lo, lo + len).unwrap(), 1e-3 * len).unwrap();
            ((1.0 / len).ln(), r.value / len)
        })
        .collect()
}

#[test]
fn averages_grow_at_most_logarithmically() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let fit = random_averages(&mut rng, 100);
    let check = random_averages(&mut rng, 100);
    // envelope slope above the mean over a period
    let c1 = fit
        .iter()
        .map(|(l, m)| (m - UNIT_PERIOD_INTEGRAL) / l)
        .fold(0.0, f64::max);
    for (l, m) in check {
        let bound = UNIT_PERIOD_INTEGRAL + 1.2 * c1 * l;
        assert!(m <= bound, "average {m} above {bound} at log(1/|I|) = {l}");
    }
}
