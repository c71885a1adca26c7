//! Pointwise exponent estimators built on log-log regression over dyadic
//! scales `ρ = 2⁻ʲ`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::brjuno::eval_b;
use crate::cf::{convergents, CFNumber};
use crate::error::{Error, Result};
use crate::quadrature::{
    grid_position, integrate_units, local_oscillation_at, rational_from_units, to_real, units, Interval, QuadOptions,
    OSC_NODES,
};

/// Minimum number of scales a fit needs.
pub const MIN_SCALES: usize = 5;
/// Fits at or above this `r²` are acceptance grade.
pub const ACCEPTANCE_R2: f64 = 0.9;
/// Exponent of the logarithmic probe radius `h·|ln h|^γ`.
pub const PROBE_GAMMA: i32 = 2;
/// Largest quotient accepted as "bounded" by the badly approximable fit.
pub const BOUNDED_QUOTIENT: u64 = 1 << 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    PExponent,
    HolderPrimitive,
    LocalDimension,
    ModulusFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln ρ, ln M)` pairs, `ρ` strictly decreasing.
    pub scales: Vec<(f64, f64)>,
    /// Scale indices `j` of the pairs above.
    pub js: Vec<i32>,
    /// Absolute error estimate of `M` at each scale.
    pub errors: Vec<f64>,
    /// Scales dropped because their evaluation failed, with the reason.
    pub dropped: Vec<(i32, String)>,
    pub p: f64,
    pub kind: EstimateKind,
}

impl ExponentEstimate {
    pub fn acceptance_grade(&self) -> bool {
        self.r_squared >= ACCEPTANCE_R2
    }
}

/// Ordinary least squares `y = a + b·x`; returns `(b, a, r²)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (b, my - b * mx, r2)
}

fn check_scales(j_min: i32, j_max: i32) -> Result<()> {
    if !(4 <= j_min && j_min < j_max && j_max <= 22) {
        return Err(Error::domain(format!("need 4 ≤ j_min < j_max ≤ 22, got [{j_min}, {j_max}]")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if p != 1.0 && p != 2.0 {
        return Err(Error::domain(format!("p = {p} unsupported; use 1 or 2")));
    }
    Ok(())
}

/// Fits `ln value(j)` against `ln 2⁻ʲ`, dropping scales whose evaluation
/// fails or is not positive. `f` returns the value and its absolute error.
fn fit_scales<F>(j_min: i32, j_max: i32, p: f64, kind: EstimateKind, mut f: F) -> Result<ExponentEstimate>
where
    F: FnMut(i32, f64) -> Result<(f64, f64)>,
{
    let mut scales = Vec::new();
    let mut js = Vec::new();
    let mut errors = Vec::new();
    let mut dropped = Vec::new();
    for j in j_min..=j_max {
        let rho = 2f64.powi(-j);
        match f(j, rho) {
            Ok((v, e)) if v > 0.0 && v.is_finite() => {
                scales.push((rho.ln(), v.ln()));
                js.push(j);
                errors.push(e);
            }
            Ok((v, _)) => dropped.push((j, format!("non-positive value {v}"))),
            Err(e) => dropped.push((j, e.to_string())),
        }
    }
    if scales.len() < MIN_SCALES {
        return Err(Error::Estimation(format!(
            "only {} usable scales (need {MIN_SCALES}); dropped: {:?}",
            scales.len(),
            dropped
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = scales.iter().copied().unzip();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(ExponentEstimate {
        slope,
        intercept,
        r_squared,
        scales,
        js,
        errors,
        dropped,
        p,
        kind,
    })
}

/// Slope of `ln M_p(2⁻ʲ)` against `ln 2⁻ʲ` with the optimal constant.
pub fn estimate_p_exponent(x0: &CFNumber, p: f64, j_min: i32, j_max: i32) -> Result<ExponentEstimate> {
    check_scales(j_min, j_max)?;
    check_p(p)?;
    let c = grid_position(x0)?;
    fit_scales(j_min, j_max, p, EstimateKind::PExponent, |_, rho| {
        let o = local_oscillation_at(c, rho, p, None, OSC_NODES)?;
        Ok((o.value, o.error_estimate))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PComparison {
    pub p1: ExponentEstimate,
    pub p2: ExponentEstimate,
    pub difference: f64,
}

/// `p = 1` and `p = 2` exponents on identical nodes.
pub fn compare_p_exponents(x0: &CFNumber, j_min: i32, j_max: i32) -> Result<PComparison> {
    check_scales(j_min, j_max)?;
    let c = grid_position(x0)?;
    use crate::quadrature::{oscillation_of, uniform_nodes};
    let mut m2 = Vec::new();
    let p1 = fit_scales(j_min, j_max, 1.0, EstimateKind::PExponent, |_, rho| {
        crate::quadrature::check_osc_args(rho, 1.0)?;
        let r = units(rho);
        let coarse = uniform_nodes(c - r, c + r, OSC_NODES / 2);
        let fine = uniform_nodes(c - r, c + r, OSC_NODES);
        let level = |p: f64| {
            let (f, _) = oscillation_of(&fine, p, None);
            let (g, _) = oscillation_of(&coarse, p, None);
            (f, (f - g).abs())
        };
        m2.push(level(2.0));
        Ok(level(1.0))
    })?;
    let mut it = m2.into_iter();
    let p2 = fit_scales(j_min, j_max, 2.0, EstimateKind::PExponent, |_, _| {
        it.next().ok_or_else(|| Error::Estimation("missing p = 2 value".into()))
    })?;
    let difference = (p1.slope - p2.slope).abs();
    Ok(PComparison { p1, p2, difference })
}

/// Slope of `ln(2ρ·M₁(ρ))` with `D = B(x₀)`, the unnormalized oscillation
/// integral. Requires `x₀` irrational.
pub fn modulus_fit(x0: &CFNumber, j_min: i32, j_max: i32) -> Result<ExponentEstimate> {
    check_scales(j_min, j_max)?;
    let b0 = eval_b(x0, 1e-12)?.value;
    let c = grid_position(x0)?;
    fit_scales(j_min, j_max, 1.0, EstimateKind::ModulusFit, |_, rho| {
        let o = local_oscillation_at(c, rho, 1.0, Some(b0), OSC_NODES)?;
        Ok((2.0 * o.rho * o.value, 2.0 * o.rho * o.error_estimate))
    })
}

/// [`modulus_fit`] after checking that every quotient relevant down to
/// `2⁻ʲᵐᵃˣ` stays at most [`BOUNDED_QUOTIENT`].
pub fn modulus_fit_badly_approximable(x0: &CFNumber, j_min: i32, j_max: i32) -> Result<ExponentEstimate> {
    check_scales(j_min, j_max)?;
    let depth = relevant_depth(x0, j_max)?;
    for n in 1..=depth {
        let a = x0.quotient(n)?.ok_or_else(|| Error::domain("rational center is not badly approximable"))?;
        if a > &num_bigint::BigUint::from(BOUNDED_QUOTIENT) {
            return Err(Error::domain(format!(
                "a_{n} = {a} exceeds the bound {BOUNDED_QUOTIENT}; not verified badly approximable"
            )));
        }
    }
    modulus_fit(x0, j_min, j_max)
}

/// Depth at which `q_n² ≥ 2^{j_max+8}`, covering every scale in the fit.
fn relevant_depth(x0: &CFNumber, j_max: i32) -> Result<usize> {
    let target = (j_max as u64 + 8).div_ceil(2);
    let avail = x0.depth_available().unwrap_or(400).min(400);
    let cv = convergents(x0, avail)?;
    for c in &cv.items[2..] {
        if c.q.bits() > target {
            return Ok(c.n as usize);
        }
    }
    Ok(cv.last_index().max(0) as usize)
}

/// `𝔅(x) = ∫₀ˣ B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimitiveEval {
    #[serde(serialize_with = "ser_rational")]
    pub x: BigRational,
    pub value: f64,
    pub error_estimate: f64,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub fn primitive_eval(x: &BigRational, tol: f64) -> Result<PrimitiveEval> {
    if x <= &BigRational::zero() || x >= &BigRational::one() {
        return Err(Error::domain(format!("{x} is not in (0,1)")));
    }
    let r = crate::quadrature::integrate_b(&Interval::new(BigRational::zero(), x.clone())?, tol)?;
    Ok(PrimitiveEval {
        x: x.clone(),
        value: r.value,
        error_estimate: r.error_estimate,
    })
}

/// `Δ₂f(x,h) = 2f(x+h/2) − f(x+h) − f(x)` for any function.
pub fn second_difference_of<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    2.0 * f(x + h / 2.0) - f(x + h) - f(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondDifference {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// `Δ₂𝔅(x,h)` at tolerance `h·10⁻⁴`.
///
/// Evaluated as `∫_x^{x+h/2} B − ∫_{x+h/2}^{x+h} B`, which equals the three
/// primitive combination without subtracting values of order one.
pub fn second_difference(x: &BigRational, h: f64) -> Result<SecondDifference> {
    second_difference_tol(x, h, h * 1e-4)
}

pub fn second_difference_tol(x: &BigRational, h: f64, tol: f64) -> Result<SecondDifference> {
    if !(h > 0.0) {
        return Err(Error::domain("h must be positive"));
    }
    let hr = BigRational::from_float(h).ok_or_else(|| Error::domain("non-finite h"))?;
    let end = x + &hr;
    if x <= &BigRational::zero() || end >= BigRational::one() {
        return Err(Error::domain("need x and x+h inside (0,1)"));
    }
    let mid = x + hr / BigRational::from_integer(BigInt::from(2));
    let opts = QuadOptions::default();
    let a = crate::quadrature::integrate_b_with(&Interval::new(x.clone(), mid.clone())?, tol, &opts)?;
    let b = crate::quadrature::integrate_b_with(&Interval::new(mid, end)?, tol, &opts)?;
    Ok(SecondDifference {
        value: a.value - b.value,
        error_estimate: a.error_estimate + b.error_estimate,
        evaluations: a.evaluations + b.evaluations,
    })
}

/// Probe points for the primitive's second differences at step `h`: the
/// center itself when rational, otherwise the point straddling it, plus
/// every convergent within `h·|ln h|^γ` of it.
pub fn probe_net(x0: &CFNumber, h: f64) -> Result<Vec<BigRational>> {
    let radius = h * (-h.ln()).powi(PROBE_GAMMA);
    let mut net = Vec::new();
    if let Some(r) = x0.as_rational() {
        net.push(r);
    } else {
        let c = grid_position(x0)?;
        net.push(rational_from_units(c - units(h / 2.0)));
    }
    let x0f = x0.to_f64();
    let avail = x0.depth_available().unwrap_or(200).min(200);
    let cv = convergents(x0, avail)?;
    for c in &cv.items[2..] {
        let p = c.p.to_f64().unwrap_or(f64::NAN);
        let q = c.q.to_f64().unwrap_or(f64::INFINITY);
        if q * q * h > 1e6 {
            break;
        }
        if (p / q - x0f).abs() <= radius && q > 1.0 {
            let r = BigRational::new(BigInt::from(c.p.clone()), BigInt::from(c.q.clone()));
            if !net.contains(&r) {
                net.push(r);
            }
        }
    }
    Ok(net)
}

/// Slope of `ln sup |Δ₂𝔅(r, ±h)|` over the probe net against `ln h`.
pub fn estimate_holder_primitive(x0: &CFNumber, j_min: i32, j_max: i32) -> Result<ExponentEstimate> {
    check_scales(j_min, j_max)?;
    fit_scales(j_min, j_max, f64::INFINITY, EstimateKind::HolderPrimitive, |_, h| {
        let tol = 1e-3 * h.powf(1.5);
        let mut best = (0.0f64, 0.0f64);
        let hr = BigRational::from_float(h).unwrap();
        for r in probe_net(x0, h)? {
            // singular point at the left end, then at the right end
            for x in [r.clone(), &r - &hr] {
                if let Ok(d) = second_difference_tol(&x, h, tol) {
                    if d.value.abs() > best.0 {
                        best = (d.value.abs(), d.error_estimate);
                    }
                }
            }
        }
        Ok(best)
    })
}

/// Slope of `ln μ([x₀−ρ, x₀+ρ])` against `ln ρ` for `μ = B dx`.
pub fn local_dimension(x0: &CFNumber, j_min: i32, j_max: i32) -> Result<ExponentEstimate> {
    check_scales(j_min, j_max)?;
    let c = grid_position(x0)?;
    let sing = x0.as_rational().map(|_| vec![c]).unwrap_or_default();
    fit_scales(j_min, j_max, 1.0, EstimateKind::LocalDimension, |_, rho| {
        let r = units(rho);
        let res = integrate_units(c - r, c + r, &sing, 1e-4 * rho, &QuadOptions::default());
        if !res.converged {
            return Err(Error::Estimation(format!(
                "quadrature did not converge at rho {rho:e} (error {:e})",
                res.error_estimate
            )));
        }
        Ok((res.value, res.error_estimate))
    })
}

/// `(1/|I|)∫_I B` for `I = (x₀−ρ, x₀+ρ)` given in grid coordinates, used by
/// growth checks.
pub fn window_average(c: i128, rho: f64, tol: f64) -> f64 {
    let r = units(rho);
    let res = integrate_units(c - r, c + r, &[], tol, &QuadOptions::default());
    res.value / (2.0 * to_real(r))
}
