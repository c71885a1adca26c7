//! The Brjuno series `B(x) = Σₖ βₖ₋₁(x) ln(1/Aᵏ(x))`, its finite
//! counterpart `B̃` at rationals, and checks of its functional equation and
//! term bounds.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cf::{convergents, tails, CFNumber, Kind};
use crate::error::{Error, Result};
use crate::num::{big_to_f64, ln_big, ratio_f64, Ext, Precision, Real};

/// Terms summed explicitly past the truncation index when bounding the tail.
const TAIL_WINDOW: usize = 4;
/// Extra quotients read past the last term so `Aᵏ(x)` is pinned down.
const LOOKAHEAD: usize = 60;
/// Hard cap on the number of series terms.
const MAX_TERMS: usize = 20_000;

/// One term `γₖ = βₖ₋₁ · ln(1/Aᵏ(x))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrjunoTerm {
    pub k: usize,
    pub gamma: f64,
    pub beta_prev: f64,
    /// `ln βₖ₋₁`, finite even when `beta_prev` underflows.
    pub ln_beta_prev: f64,
    pub log_inv_a: f64,
}

/// A truncated series value with a bound on what was left out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEval {
    pub value: f64,
    /// Index of the last term included.
    pub depth: usize,
    /// Bound on the omitted tail plus accumulated rounding.
    pub tail_bound: f64,
    pub precision: Precision,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<BrjunoTerm>>,
}

/// `B(x)` to within `tol`, in double precision.
pub fn eval_b(x: &CFNumber, tol: f64) -> Result<SeriesEval> {
    eval_b_with(x, tol, Precision::Double, false)
}

/// `B(x)` to within `tol` at the requested precision, optionally keeping the
/// individual terms. A double-precision sum whose rounding bound alone
/// exceeds `tol` is redone in extended precision.
pub fn eval_b_with(x: &CFNumber, tol: f64, precision: Precision, keep_terms: bool) -> Result<SeriesEval> {
    if x.kind() == Kind::Rational {
        return Err(Error::RationalInput(x.label()));
    }
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tol must be positive, got {tol}")));
    }
    let plan = plan_depth(x, tol)?;
    let mut eval = match precision {
        Precision::Double => sum_series::<f64>(x, plan.depth, plan.bound, keep_terms)?,
        Precision::Extended => sum_series::<Ext>(x, plan.depth, plan.bound, keep_terms)?,
    };
    if !plan.exhausted && eval.tail_bound > tol && precision == Precision::Double {
        // rounding alone exceeds tol
        eval = sum_series::<Ext>(x, plan.depth, plan.bound, keep_terms)?;
    }
    if !plan.exhausted && !(eval.tail_bound <= tol) {
        return Err(Error::Resource {
            what: format!(
                "rounding bound {:.3e} of the {}-term sum stays above tol {tol:.3e}",
                eval.tail_bound - plan.bound,
                eval.depth + 1
            ),
            partial: Some(Box::new(eval)),
        });
    }
    if plan.exhausted {
        return Err(Error::Resource {
            what: format!(
                "{} has only {} quotients; tail bound {:.3e} stays above tol {tol:.3e}",
                x.label(),
                x.depth_available().unwrap_or(0),
                eval.tail_bound
            ),
            partial: Some(Box::new(eval)),
        });
    }
    Ok(eval)
}

/// The first `depth + 1` terms `γ₀ … γ_depth`, with the same tail bound
/// [`eval_b`] would attach at that depth.
pub fn eval_b_to_depth(x: &CFNumber, depth: usize, precision: Precision) -> Result<SeriesEval> {
    if x.kind() == Kind::Rational {
        return Err(Error::RationalInput(x.label()));
    }
    let bound = tail_bound_at(x, depth)?.unwrap_or(f64::INFINITY);
    match precision {
        Precision::Double => sum_series::<f64>(x, depth, bound, true),
        Precision::Extended => sum_series::<Ext>(x, depth, bound, true),
    }
}

struct Plan {
    depth: usize,
    bound: f64,
    exhausted: bool,
}

/// Smallest `N` whose certified tail bound is below `tol`.
fn plan_depth(x: &CFNumber, tol: f64) -> Result<Plan> {
    let mut best = (0usize, f64::INFINITY);
    for n in 0..MAX_TERMS {
        match tail_bound_at(x, n)? {
            Some(b) => {
                best = (n, b);
                if b < tol {
                    return Ok(Plan {
                        depth: n,
                        bound: b,
                        exhausted: false,
                    });
                }
            }
            None => {
                // quotients ran out; the last computable bound is the best we have
                let (depth, bound) = if best.1.is_finite() {
                    best
                } else {
                    (n.saturating_sub(1), f64::INFINITY)
                };
                return Ok(Plan {
                    depth,
                    bound,
                    exhausted: true,
                });
            }
        }
    }
    Err(Error::resource(format!("more than {MAX_TERMS} terms needed for tol {tol:e}")))
}

/// Bound on `Σ_{k>N} γₖ`:
/// `Σ_{k=N+1}^{N+W} ln(qₖ₊₁)/qₖ + 4·ln(q_{N+W+2})/q_{N+W+1}`, using
/// `γₖ ≤ ln(qₖ₊₁)/qₖ` term by term and the geometric majorant beyond the
/// window. `None` when the needed quotients are not available.
pub fn tail_bound_at(x: &CFNumber, n: usize) -> Result<Option<f64>> {
    let need = n + TAIL_WINDOW + 2;
    if let Some(avail) = x.depth_available() {
        if avail < need {
            return Ok(None);
        }
    }
    let cv = convergents(x, need)?;
    let term = |k: usize| {
        let qk = big_to_f64(&cv.get(k as i64).q);
        ln_big(&cv.get(k as i64 + 1).q) / qk
    };
    let mut s = 0.0;
    for k in n + 1..=n + TAIL_WINDOW {
        s += term(k);
    }
    s += 4.0 * term(n + TAIL_WINDOW + 1);
    Ok(Some(s))
}

fn sum_series<R: Real>(x: &CFNumber, depth: usize, bound: f64, keep: bool) -> Result<SeriesEval> {
    let t = tails::<R>(x, depth, LOOKAHEAD)?;
    let cv = convergents(x, depth)?;
    let mut value = R::zero();
    let mut terms = keep.then(Vec::new);
    let mut abs_sum = 0.0f64;
    for k in 0..=depth {
        let (beta, ln_beta) = if k == 0 {
            (R::one(), 0.0)
        } else {
            let qk = &cv.get(k as i64).q;
            let qk1 = &cv.get(k as i64 - 1).q;
            let ln_b = crate::cf::ln_beta_from(qk, qk1, t.theta[k].to_f64());
            if qk.bits() < 900 {
                (R::one() / (R::from_big(qk) + t.theta[k].clone() * R::from_big(qk1)), ln_b)
            } else {
                // saturates to zero past the f64 range
                let d = big_to_f64(qk) + t.theta[k].to_f64() * big_to_f64(qk1);
                (R::from_f64(1.0 / d), ln_b)
            }
        };
        let g = beta.clone() * t.ln_inv[k].clone();
        abs_sum += g.to_f64().abs();
        let gamma = g.to_f64();
        value = value + g;
        if let Some(v) = terms.as_mut() {
            v.push(BrjunoTerm {
                k,
                gamma,
                beta_prev: beta.to_f64(),
                ln_beta_prev: ln_beta,
                log_inv_a: t.ln_inv[k].to_f64(),
            });
        }
    }
    let rounding = 4.0 * R::EPSILON * (depth as f64 + 2.0) * abs_sum;
    let precision = R::PRECISION;
    Ok(SeriesEval {
        value: value.to_f64(),
        depth,
        tail_bound: bound + rounding,
        precision,
        terms,
    })
}

/// `B̃(r) = Σ_{n<N} βₙ₋₁(r) ln(1/Aⁿ(r))` over the canonical expansion of
/// `r = m/D`. With Euclidean remainders `r₀ = D, r₁ = m, …` each term is
/// `(rₙ/D)·ln(rₙ/rₙ₊₁)`.
pub fn eval_btilde(r: &BigRational) -> Result<f64> {
    if !r.is_positive() || r >= &BigRational::one() {
        return Err(Error::domain(format!("{r} is not in (0,1)")));
    }
    let d = r.denom().magnitude().clone();
    let mut a = d.clone();
    let mut b = r.numer().magnitude().clone();
    let mut sum = 0.0;
    while !b.is_zero() {
        let rem = &a % &b;
        sum += ratio_f64(&a, &d) * ln_ratio(&a, &b, &rem);
        a = b;
        b = rem;
    }
    Ok(sum)
}

/// `ln(a/b)` for `a ≥ b > 0` given `a mod b`, without cancellation.
fn ln_ratio(a: &BigUint, b: &BigUint, rem: &BigUint) -> f64 {
    let quot = a / b;
    let theta = ratio_f64(rem, b);
    if quot.is_one() {
        theta.ln_1p()
    } else if quot.bits() <= 53 {
        (big_to_f64(&quot) + theta).ln()
    } else {
        ln_big(&quot) + (theta / big_to_f64(&quot)).ln_1p()
    }
}

/// `|B(x) − ln(1/x) − x·B({1/x})|`, both evaluations at `tol/3`.
pub fn check_functional_equation(x: &CFNumber, tol: f64) -> Result<f64> {
    Ok(functional_equation_parts(x, tol)?.residual)
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalCheck {
    pub b_x: SeriesEval,
    pub b_shift: SeriesEval,
    pub x: f64,
    pub ln_inv_x: f64,
    pub residual: f64,
}

pub fn functional_equation_parts(x: &CFNumber, tol: f64) -> Result<FunctionalCheck> {
    let precision = if tol < 1e-11 {
        Precision::Extended
    } else {
        Precision::Double
    };
    let b_x = eval_b_with(x, tol / 3.0, precision, false)?;
    let shifted = x.shift(1);
    let b_shift = eval_b_with(&shifted, tol / 3.0, precision, false)?;
    let t = tails::<Ext>(x, 0, LOOKAHEAD)?;
    let (xv, ln_inv) = (t.theta[0].clone(), t.ln_inv[0].clone());
    let (x_f, ln_inv_f) = (xv.to_f64(), ln_inv.to_f64());
    let rhs = ln_inv + xv * Ext::from_f64(b_shift.value);
    let residual = (Ext::from_f64(b_x.value) - rhs).abs().to_f64();
    Ok(FunctionalCheck {
        x: x_f,
        ln_inv_x: ln_inv_f,
        b_x,
        b_shift,
        residual,
    })
}

/// One row of the two-sided term bound
/// `(ln qₖ₊₁ − ln 2qₖ)/qₖ ≤ γₖ ≤ ln(qₖ₊₁)/qₖ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaBound {
    pub k: usize,
    pub lower: f64,
    pub gamma: f64,
    pub upper: f64,
    /// Evaluated on `qₖ`-scaled quantities, so it stays meaningful when the
    /// raw values underflow.
    pub holds: bool,
}

pub fn gamma_bounds_check(x: &CFNumber, k_max: usize) -> Result<Vec<GammaBound>> {
    if k_max < 1 {
        return Err(Error::domain("k_max must be at least 1"));
    }
    let mut k_max = k_max;
    if let Some(avail) = x.depth_available() {
        // γₖ needs qₖ₊₁; for rationals the last term k = N−1 uses q_N
        let cap = if x.is_rational() { avail.saturating_sub(1) } else { avail.saturating_sub(1) };
        k_max = k_max.min(cap);
    }
    let cv = convergents(x, k_max + 1)?;
    let t = tails::<f64>(x, k_max, LOOKAHEAD)?;
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let qk = &cv.get(k as i64).q;
        let qkm = &cv.get(k as i64 - 1).q;
        let qk1 = &cv.get(k as i64 + 1).q;
        // qₖβₖ₋₁ = 1/(1 + θₖ qₖ₋₁/qₖ)
        let scaled_beta = 1.0 / (1.0 + t.theta[k] * ratio_f64(qkm, qk));
        let g_s = scaled_beta * t.ln_inv[k];
        let g_lo = scaled_beta.min(1.0 / (1.0 + ratio_f64(qkm, qk))) * t.ln_inv_lo[k];
        let g_hi = t.ln_inv_hi[k];
        let up_s = ln_big(qk1);
        let lo_s = ln_big(qk1) - ln_big(qk) - std::f64::consts::LN_2;
        let slack = 1e-12 * up_s.abs().max(1.0);
        let holds = lo_s <= g_s.max(g_lo) + slack && g_s.min(g_hi) <= up_s + slack;
        let qf = big_to_f64(qk);
        out.push(GammaBound {
            k,
            lower: lo_s / qf,
            gamma: g_s / qf,
            upper: up_s / qf,
            holds,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::{construct_tau_number, ratio};
    use proptest::prelude::*;

    fn golden_closed() -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        (1.0 / g).ln() / (1.0 - g)
    }

    fn silver_closed() -> f64 {
        let s = 2f64.sqrt() - 1.0;
        (1.0 / s).ln() / (1.0 - s)
    }

    #[test]
    fn golden_fixed_point() {
        let e = eval_b(&CFNumber::golden(), 1e-10).unwrap();
        assert!((e.value - golden_closed()).abs() < 1e-10, "{}", e.value);
        assert!((e.value - 1.25983).abs() < 1e-5);
        assert!(e.tail_bound < 1e-10);
    }

    #[test]
    fn silver_fixed_point() {
        let e = eval_b(&CFNumber::silver(), 1e-10).unwrap();
        assert!((e.value - silver_closed()).abs() < 1e-10);
        assert!((e.value - 1.50460).abs() < 1e-5);
    }

    #[test]
    fn extended_precision_reaches_1e_15() {
        // 30-digit reference of ln(1/g)/(1−g)
        let closed = 1.259_828_913_794_410_219_858_429_911_32;
        let e = eval_b_with(&CFNumber::golden(), 1e-15, Precision::Extended, false).unwrap();
        assert!(e.tail_bound <= 1e-15);
        assert!((e.value - closed).abs() <= f64::EPSILON);
    }

    #[test]
    fn double_sum_below_its_rounding_floor_is_redone_extended() {
        // ≈ 25-digit sum of its first five terms, exact quotients
        let reference = 2.492_025_169_992_618_669_748_467;
        let x = crate::xspec::parse("tau:6").unwrap().number;
        let e = eval_b_with(&x, 1e-15, Precision::Double, false).unwrap();
        assert_eq!(e.precision, Precision::Extended);
        assert!(e.tail_bound <= 1e-15);
        assert!((e.value - reference).abs() <= 2.0 * f64::EPSILON);
        let loose = eval_b_with(&x, 1e-9, Precision::Double, false).unwrap();
        assert_eq!(loose.precision, Precision::Double);
    }

    #[test]
    fn rational_input_refused() {
        let x = CFNumber::from_rational(&ratio(1, 2)).unwrap();
        assert!(matches!(eval_b(&x, 1e-9), Err(Error::RationalInput(_))));
        assert!(matches!(eval_b(&CFNumber::golden(), 0.0), Err(Error::Domain(_))));
        assert!(matches!(eval_b(&CFNumber::golden(), f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn short_random_source_gives_partial_value() {
        let x = CFNumber::random(3, 8);
        match eval_b(&x, 1e-12) {
            Err(Error::Resource { partial: Some(p), .. }) => {
                assert!(p.value > 0.0);
                assert!(p.tail_bound > 1e-12);
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn btilde_examples() {
        for k in 2..=100u64 {
            let v = eval_btilde(&ratio(1, k)).unwrap();
            assert!((v - (k as f64).ln()).abs() < 1e-13);
        }
        let v = eval_btilde(&ratio(2, 5)).unwrap();
        assert!((v - (2.5f64.ln() + 0.4 * 2f64.ln())).abs() < 1e-15);
        assert!((v - 1.193550).abs() < 1e-6);
        assert!(eval_btilde(&ratio(2, 2)).is_err());
        assert!(eval_btilde(&ratio(0, 2)).is_err());
    }

    #[test]
    fn btilde_direct_sum_oracle() {
        // finite sum from the orbit x, A(x), … and βₙ = |qₙx − pₙ|, in exact
        // rationals and then f64 logs
        let x = ratio(355, 1113);
        let cf = CFNumber::from_rational(&x).unwrap();
        let orbit = crate::cf::gauss_orbit(&cf, 50).unwrap();
        let cv = convergents(&cf, 50).unwrap();
        let mut s = 0.0;
        for (n, p) in orbit.points.iter().enumerate() {
            let crate::cf::OrbitPoint::Exact(a) = p else { panic!() };
            let c = cv.get(n as i64 - 1);
            let beta = (&x * BigRational::from_integer(c.q.clone().into()) - BigRational::from_integer(c.p.clone().into())).abs();
            let bf = num_traits::ToPrimitive::to_f64(&beta).unwrap();
            let af = num_traits::ToPrimitive::to_f64(a).unwrap();
            s += bf * (1.0 / af).ln();
        }
        assert!((eval_btilde(&x).unwrap() - s).abs() < 1e-14);
    }

    #[test]
    fn btilde_matches_irrational_prefix() {
        // continuing r's expansion with a large quotient keeps the first N
        // terms within 1e-9 of B̃(r) once q_N ≥ 10⁶
        let r = ratio(1234567, 7654321);
        let mut q = crate::cf::expand_rational(&r).unwrap();
        let n = q.len();
        q.push(BigUint::from(1000u32));
        let x = CFNumber::periodic(q, vec![BigUint::one()]).unwrap();
        let e = eval_b_to_depth(&x, n - 1, Precision::Double).unwrap();
        let bt = eval_btilde(&r).unwrap();
        let diff = (e.value - bt).abs();
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn functional_equation_examples() {
        for x in [CFNumber::golden(), CFNumber::silver()] {
            let r = check_functional_equation(&x, 1e-9).unwrap();
            assert!(r <= 2e-9, "{r}");
        }
        for seed in 0..5 {
            let r = check_functional_equation(&CFNumber::random(seed, 60), 1e-9).unwrap();
            assert!(r <= 2e-9);
        }
    }

    #[test]
    fn gamma_bounds_golden_and_tau() {
        let rows = gamma_bounds_check(&CFNumber::golden(), 20).unwrap();
        assert_eq!(rows.len(), 20);
        assert!(rows.iter().all(|r| r.holds && r.lower <= r.gamma && r.gamma <= r.upper));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!((rows[0].gamma - g * (1.0 / g).ln()).abs() < 1e-15);
        let x = construct_tau_number(4.0, 7, 2).unwrap();
        let rows = gamma_bounds_check(&x, 5).unwrap();
        assert!(rows.iter().all(|r| r.holds));
        // with large quotients γₖ sits at the lower edge, (τ−2)/(τ−1) of the upper
        assert!(((rows[3].gamma - rows[3].lower) / rows[3].upper).abs() < 0.02);
        assert!((rows[3].gamma / rows[3].upper - 2.0 / 3.0).abs() < 0.05);
        assert!(gamma_bounds_check(&x, 0).is_err());
    }

    #[test]
    fn gamma_bounds_rational_truncates() {
        let x = CFNumber::from_rational(&ratio(5, 17)).unwrap();
        let rows = gamma_bounds_check(&x, 10).unwrap();
        assert_eq!(rows.len(), crate::cf::expand_rational(&ratio(5, 17)).unwrap().len() - 1);
        assert!(rows.iter().all(|r| r.holds));
    }

    #[test]
    fn certified_tail_on_quadratics() {
        for x in [
            CFNumber::golden(),
            CFNumber::silver(),
            CFNumber::periodic(vec![BigUint::from(5u32)], vec![BigUint::from(1u32), BigUint::from(7u32)]).unwrap(),
        ] {
            let e = eval_b(&x, 1e-6).unwrap();
            let deep = eval_b_to_depth(&x, e.depth + 200, Precision::Extended).unwrap();
            let true_tail = deep.value - e.value;
            assert!(true_tail <= e.tail_bound, "{true_tail} > {}", e.tail_bound);
            assert!(true_tail >= -1e-15);
        }
    }

    proptest! {
        #[test]
        fn partial_sums_increase(seed in any::<u64>()) {
            let x = CFNumber::random(seed, 60);
            let e = eval_b_to_depth(&x, 30, Precision::Double).unwrap();
            let terms = e.terms.unwrap();
            let mut acc = 0.0;
            for t in &terms {
                prop_assert!(t.gamma >= 0.0);
                let next = acc + t.gamma;
                prop_assert!(next >= acc);
                acc = next;
            }
            prop_assert!(terms[0].gamma > 0.0);
            prop_assert!(e.value >= terms[0].log_inv_a);
        }

        #[test]
        fn gamma_bounds_hold_for_random(seed in any::<u64>()) {
            let x = CFNumber::random(seed, 60);
            let rows = gamma_bounds_check(&x, 40).unwrap();
            prop_assert!(rows.iter().all(|r| r.holds));
        }

        #[test]
        fn positivity_on_unit_interval(seed in any::<u64>()) {
            let x = CFNumber::random(seed, 60);
            let e = eval_b(&x, 1e-8).unwrap();
            prop_assert!(e.value >= -x.to_f64().ln() - 1e-12);
        }

        #[test]
        fn btilde_is_sum_of_prefix_terms(q in prop::collection::vec(1u64..30, 1..12)) {
            let x = CFNumber::finite(q.iter().map(|&a| BigUint::from(a)).collect());
            if let Ok(x) = x {
                let r = x.as_rational().unwrap();
                let n = x.quotients(100).unwrap().len();
                let bt = eval_btilde(&r).unwrap();
                let t = tails::<f64>(&x, n - 1, 0).unwrap();
                let cv = convergents(&x, n).unwrap();
                let mut s = 0.0;
                for k in 0..n {
                    let beta = if k == 0 { 1.0 } else {
                        1.0 / (big_to_f64(&cv.get(k as i64).q) + t.theta[k] * big_to_f64(&cv.get(k as i64 - 1).q))
                    };
                    s += beta * t.ln_inv[k];
                }
                prop_assert!((s - bt).abs() < 1e-12 * bt.max(1.0));
            }
        }
    }
}
