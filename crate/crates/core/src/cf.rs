//! Exact continued-fraction arithmetic.
//!
//! A [`CFNumber`] is a real in (0,1) given by its partial quotients
//! `a₁, a₂, …`. Convergents are exact big integers; Gauss-map iterates are
//! exact for rationals and quadratic surds and certified enclosures otherwise.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::num::{big_to_f64, ln_add_exp, ln_big, ln_big_int, ratio_f64, Real};

/// Largest convergent denominator, in bits, the rule constructions may build.
pub const RULE_BIT_BUDGET: u64 = 1 << 20;

/// Cap on a single Gauss–Kuzmin sample; larger draws have probability below 2⁻⁵².
const RANDOM_QUOTIENT_CAP: f64 = 9.0e15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Rational,
    Quadratic,
    Rule,
    Random,
}

#[derive(Debug)]
enum Source {
    Finite(Vec<BigUint>),
    Periodic {
        pre: Vec<BigUint>,
        period: Vec<BigUint>,
    },
    Rule {
        tau: f64,
        a1: u64,
        quotients: Vec<BigUint>,
    },
    Random {
        seed: u64,
        quotients: Vec<BigUint>,
    },
}

/// How many quotients a number can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Availability {
    /// Never runs out.
    Infinite,
    /// A rational whose expansion terminates after this many quotients.
    Terminates(usize),
    /// Precomputed to this depth; asking further is an error.
    Limited(usize),
}

/// A real in (0,1) specified by its partial-quotient source.
///
/// Cloning is cheap: the source is shared and [`CFNumber::shift`] only moves
/// an offset.
#[derive(Debug, Clone)]
pub struct CFNumber {
    source: Arc<Source>,
    start: usize,
}

impl CFNumber {
    /// A finite expansion. A trailing 1 is folded into its predecessor.
    pub fn finite(quotients: Vec<BigUint>) -> Result<Self> {
        let q = normalize_finite(quotients)?;
        Ok(Self::wrap(Source::Finite(q)))
    }

    pub fn from_rational(x: &BigRational) -> Result<Self> {
        Ok(Self::wrap(Source::Finite(expand_rational(x)?)))
    }

    /// `[0; pre…, period, period, …]`.
    pub fn periodic(pre: Vec<BigUint>, period: Vec<BigUint>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::domain("period must be nonempty"));
        }
        if pre.iter().chain(period.iter()).any(|a| a.is_zero()) {
            return Err(Error::domain("partial quotients must be at least 1"));
        }
        Ok(Self::wrap(Source::Periodic { pre, period }))
    }

    /// The golden mean conjugate `(√5−1)/2 = [0;1,1,…]`.
    pub fn golden() -> Self {
        Self::periodic(vec![], vec![BigUint::one()]).unwrap()
    }

    /// `√2−1 = [0;2,2,…]`.
    pub fn silver() -> Self {
        Self::periodic(vec![], vec![BigUint::from(2u32)]).unwrap()
    }

    /// A Gauss–Kuzmin distributed number with `depth` quotients drawn from
    /// a ChaCha20 stream seeded with `seed`.
    pub fn random(seed: u64, depth: usize) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let quotients = (0..depth).map(|_| BigUint::from(gauss_kuzmin(&mut rng))).collect();
        Self::wrap(Source::Random { seed, quotients })
    }

    fn wrap(source: Source) -> Self {
        CFNumber {
            source: Arc::new(source),
            start: 0,
        }
    }

    pub fn kind(&self) -> Kind {
        match &*self.source {
            Source::Finite(_) => Kind::Rational,
            Source::Periodic { .. } => Kind::Quadratic,
            Source::Rule { .. } => Kind::Rule,
            Source::Random { .. } => Kind::Random,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.kind() == Kind::Rational
    }

    pub fn availability(&self) -> Availability {
        match &*self.source {
            Source::Finite(q) => Availability::Terminates(q.len().saturating_sub(self.start)),
            Source::Periodic { .. } => Availability::Infinite,
            Source::Rule { quotients, .. } | Source::Random { quotients, .. } => {
                Availability::Limited(quotients.len().saturating_sub(self.start))
            }
        }
    }

    /// Number of quotients that can be read without error, `None` if unbounded.
    pub fn depth_available(&self) -> Option<usize> {
        match self.availability() {
            Availability::Infinite => None,
            Availability::Terminates(n) | Availability::Limited(n) => Some(n),
        }
    }

    /// The partial quotient `aₙ` for `n ≥ 1`. `Ok(None)` means the rational
    /// expansion has ended.
    pub fn quotient(&self, n: usize) -> Result<Option<&BigUint>> {
        assert!(n >= 1, "quotients are indexed from 1");
        let i = self.start + n - 1;
        match &*self.source {
            Source::Finite(q) => Ok(q.get(i)),
            Source::Periodic { pre, period } => Ok(Some(if i < pre.len() {
                &pre[i]
            } else {
                &period[(i - pre.len()) % period.len()]
            })),
            Source::Rule { quotients, .. } | Source::Random { quotients, .. } => {
                quotients.get(i).map(Some).ok_or(Error::Exhausted {
                    index: n,
                    available: quotients.len().saturating_sub(self.start),
                })
            }
        }
    }

    /// First `n` quotients, fewer if a rational expansion ends first.
    pub fn quotients(&self, n: usize) -> Result<Vec<BigUint>> {
        let mut out = Vec::with_capacity(n.min(1024));
        for k in 1..=n {
            match self.quotient(k)? {
                Some(a) => out.push(a.clone()),
                None => break,
            }
        }
        Ok(out)
    }

    /// The Gauss iterate `Aᵏ(x)`, whose expansion drops the first `k` quotients.
    pub fn shift(&self, k: usize) -> Self {
        CFNumber {
            source: Arc::clone(&self.source),
            start: self.start + k,
        }
    }

    /// Exact value of a rational-kind number.
    pub fn as_rational(&self) -> Option<BigRational> {
        match &*self.source {
            Source::Finite(q) => Some(finite_value(&q[self.start.min(q.len())..])),
            _ => None,
        }
    }

    /// Exact value of a quadratic-kind number.
    pub fn as_surd(&self) -> Option<QuadSurd> {
        let Source::Periodic { pre, period } = &*self.source else {
            return None;
        };
        let (pre, period) = rotate_periodic(pre, period, self.start);
        Some(periodic_surd(&pre, &period))
    }

    /// Floating-point value, accurate to a few ulps.
    pub fn to_f64(&self) -> f64 {
        match self.available_lookahead(0, 80) {
            Ok(m) => {
                let mut t = 0.0f64;
                for k in (1..=m).rev() {
                    let a = big_to_f64(self.quotient(k).unwrap().unwrap());
                    t = 1.0 / (a + t);
                }
                t
            }
            Err(_) => f64::NAN,
        }
    }

    /// Short human label, mirroring the x-spec grammar where possible.
    pub fn label(&self) -> String {
        let base = match &*self.source {
            Source::Finite(_) => {
                let r = self.as_rational().unwrap();
                return format!("{}/{}", r.numer(), r.denom());
            }
            Source::Periodic { pre, period } => {
                if pre.is_empty() && period.len() == 1 && period[0] == BigUint::one() {
                    "golden".to_string()
                } else if pre.is_empty() && period.len() == 1 && period[0] == BigUint::from(2u32) {
                    "silver".to_string()
                } else {
                    format!("per:[{};{}]", join(pre), join(period))
                }
            }
            Source::Rule { tau, a1, .. } => format!("tau:{tau}:a1={a1}"),
            Source::Random { seed, quotients } => format!("rand:{seed}:{}", quotients.len()),
        };
        if self.start > 0 {
            format!("shift{}({base})", self.start)
        } else {
            base
        }
    }

    /// Largest index `m ≤ k + lookahead` with `aₘ` readable, and at least `k`.
    /// Errors if `aₖ` itself is unavailable for a non-terminating source.
    pub(crate) fn available_lookahead(&self, k: usize, lookahead: usize) -> Result<usize> {
        let want = k + lookahead;
        match self.availability() {
            Availability::Infinite => Ok(want),
            Availability::Terminates(n) => Ok(want.min(n)),
            Availability::Limited(n) => {
                if k > n {
                    Err(Error::Exhausted { index: k, available: n })
                } else {
                    Ok(want.min(n))
                }
            }
        }
    }
}

impl fmt::Display for CFNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn join(v: &[BigUint]) -> String {
    v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

fn normalize_finite(mut q: Vec<BigUint>) -> Result<Vec<BigUint>> {
    if q.is_empty() {
        return Err(Error::domain("empty expansion represents 0, outside (0,1)"));
    }
    if q.iter().any(|a| a.is_zero()) {
        return Err(Error::domain("partial quotients must be at least 1"));
    }
    if q.len() == 1 && q[0].is_one() {
        return Err(Error::domain("[0;1] = 1 lies outside (0,1)"));
    }
    if q.len() > 1 && q.last().unwrap().is_one() {
        q.pop();
        *q.last_mut().unwrap() += 1u32;
    }
    Ok(q)
}

fn rotate_periodic(pre: &[BigUint], period: &[BigUint], start: usize) -> (Vec<BigUint>, Vec<BigUint>) {
    if start <= pre.len() {
        (pre[start..].to_vec(), period.to_vec())
    } else {
        let r = (start - pre.len()) % period.len();
        let mut p = period[r..].to_vec();
        p.extend_from_slice(&period[..r]);
        (vec![], p)
    }
}

/// Gauss–Kuzmin sample by inverting `P(a ≤ k) = 1 − log₂((k+2)/(k+1))`.
fn gauss_kuzmin<R: Rng>(rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let k = (1.0 / ((1.0 - u).exp2() - 1.0) - 1.0).ceil();
    k.clamp(1.0, RANDOM_QUOTIENT_CAP) as u64
}

/// Canonical expansion of a rational in (0,1) by Euclidean division.
pub fn expand_rational(x: &BigRational) -> Result<Vec<BigUint>> {
    if !x.is_positive() || x >= &BigRational::one() {
        return Err(Error::domain(format!("{x} is not in (0,1)")));
    }
    let mut a = x.denom().magnitude().clone();
    let mut b = x.numer().magnitude().clone();
    let mut out = Vec::new();
    while !b.is_zero() {
        let (qt, r) = a.div_rem(&b);
        out.push(qt);
        a = b;
        b = r;
    }
    Ok(out)
}

/// Value of `[0; a₁, …, a_N]`.
pub fn finite_value(q: &[BigUint]) -> BigRational {
    let (mut p0, mut p1) = (BigUint::one(), BigUint::zero());
    let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
    for a in q {
        let p2 = a * &p1 + &p0;
        let q2 = a * &q1 + &q0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    // consecutive convergents are coprime, so no reduction is needed
    BigRational::new_raw(BigInt::from(p1), BigInt::from(q1))
}

/// `(n, pₙ, qₙ)`; `n = −1` gives `(1, 0)` and `n = 0` gives `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub n: i64,
    pub p: BigUint,
    pub q: BigUint,
}

#[derive(Debug, Clone)]
pub struct Convergents {
    /// Entries for `n = −1, 0, 1, …`.
    pub items: Vec<Convergent>,
    /// The expansion of a rational ended before the requested depth.
    pub terminated: bool,
}

impl Convergents {
    /// Convergent with index `n ≥ −1`.
    pub fn get(&self, n: i64) -> &Convergent {
        &self.items[(n + 1) as usize]
    }

    /// Largest index present.
    pub fn last_index(&self) -> i64 {
        self.items.len() as i64 - 2
    }
}

pub fn convergents(x: &CFNumber, depth: usize) -> Result<Convergents> {
    let mut items = vec![
        Convergent {
            n: -1,
            p: BigUint::one(),
            q: BigUint::zero(),
        },
        Convergent {
            n: 0,
            p: BigUint::zero(),
            q: BigUint::one(),
        },
    ];
    let mut terminated = false;
    for n in 1..=depth {
        let Some(a) = x.quotient(n)? else {
            terminated = true;
            break;
        };
        let (c1, c2) = (&items[n], &items[n - 1]);
        let p = a * &c1.p + &c2.p;
        let q = a * &c1.q + &c2.q;
        items.push(Convergent { n: n as i64, p, q });
    }
    Ok(Convergents { items, terminated })
}

/// A Gauss-map iterate `Aⁿ(x)`.
#[derive(Debug, Clone)]
pub enum OrbitPoint {
    Exact(BigRational),
    Surd(QuadSurd),
    /// Certified bracket from two consecutive convergents of the tail.
    Enclosure { lo: f64, hi: f64 },
}

impl OrbitPoint {
    pub fn to_f64(&self) -> f64 {
        match self {
            OrbitPoint::Exact(r) => crate::num::bigint_to_f64(r.numer()) / crate::num::bigint_to_f64(r.denom()),
            OrbitPoint::Surd(s) => s.to_f64(),
            OrbitPoint::Enclosure { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaussOrbit {
    /// `A⁰(x), A¹(x), …`.
    pub points: Vec<OrbitPoint>,
    /// A rational expansion ended: the next iterate is 0.
    pub terminated: bool,
}

/// `Aⁿ(x)` for `n = 0 … depth`.
pub fn gauss_orbit(x: &CFNumber, depth: usize) -> Result<GaussOrbit> {
    let mut points = Vec::with_capacity(depth + 1);
    match x.kind() {
        Kind::Rational => {
            let q = x.quotients(usize::MAX)?;
            for n in 0..=depth {
                if n >= q.len() {
                    return Ok(GaussOrbit { points, terminated: true });
                }
                points.push(OrbitPoint::Exact(finite_value(&q[n..])));
            }
        }
        Kind::Quadratic => {
            let mut s = x.as_surd().unwrap();
            for _ in 0..=depth {
                let next = s.gauss();
                points.push(OrbitPoint::Surd(s));
                s = next;
            }
        }
        Kind::Rule | Kind::Random => {
            for n in 0..=depth {
                let t = x.shift(n);
                let m = t.available_lookahead(1, 200)?;
                let qs = t.quotients(m)?;
                let (lo, hi) = enclosure(&qs);
                points.push(OrbitPoint::Enclosure { lo, hi });
            }
        }
    }
    Ok(GaussOrbit {
        points,
        terminated: false,
    })
}

/// Bracket `[0;q₁,…,qₘ]` and `[0;q₁,…,qₘ+1]` rounded outward.
fn enclosure(qs: &[BigUint]) -> (f64, f64) {
    let eval = |bump: f64| {
        let mut t = 0.0f64;
        for (i, a) in qs.iter().enumerate().rev() {
            let a = big_to_f64(a) + if i + 1 == qs.len() { bump } else { 0.0 };
            t = 1.0 / (a + t);
        }
        t
    };
    let (u, v) = (eval(0.0), eval(1.0));
    let (lo, hi) = if u < v { (u, v) } else { (v, u) };
    let eps = 8.0 * f64::EPSILON;
    (lo * (1.0 - eps), (hi * (1.0 + eps)).min(1.0))
}

/// Backward tail recursion: `θₖ = Aᵏ(x)` and `ln(1/θₖ)` for `k = 0 … to`.
#[derive(Debug, Clone)]
pub(crate) struct Tails<R> {
    pub theta: Vec<R>,
    pub ln_inv: Vec<R>,
    /// Certified `ln(1/θₖ)` bounds from the two extreme tail completions.
    pub ln_inv_lo: Vec<f64>,
    pub ln_inv_hi: Vec<f64>,
}

/// `ln(a + t)` for `t ∈ [0,1]`, with `a` possibly huge.
fn ln_quot_plus<R: Real>(a: &BigUint, t: R) -> R {
    if a.bits() > 100 {
        R::ln_big(a) + t * R::recip_big_plus(a, R::zero())
    } else {
        (R::from_big(a) + t).ln()
    }
}

pub(crate) fn tails<R: Real>(x: &CFNumber, to: usize, lookahead: usize) -> Result<Tails<R>> {
    let m = x.available_lookahead(to, lookahead.max(1))?;
    let qs = x.quotients(m)?;
    let exact_end = qs.len() < m || matches!(x.availability(), Availability::Terminates(n) if n <= m);
    let n = qs.len();
    let mut theta = vec![R::zero(); to + 1];
    let mut ln_inv = vec![R::zero(); to + 1];
    let mut lo = vec![0.0; to + 1];
    let mut hi = vec![0.0; to + 1];
    let (mut t, mut t_lo, mut t_hi) = if exact_end {
        (R::zero(), 0.0f64, 0.0f64)
    } else {
        (R::from_f64(0.5), 0.0f64, 1.0f64)
    };
    // t holds θ_k for k = n down to 0
    if n <= to {
        theta[n] = t.clone();
    }
    for k in (0..n).rev() {
        let a = &qs[k];
        let l = ln_quot_plus(a, t.clone());
        let l_lo = ln_quot_plus(a, t_lo.min(t_hi));
        let l_hi = ln_quot_plus(a, t_lo.max(t_hi));
        let af = big_to_f64(a);
        let (n_lo, n_hi) = (1.0 / (af + t_hi.max(t_lo)), 1.0 / (af + t_lo.min(t_hi)));
        t = R::recip_big_plus(a, t);
        t_lo = n_lo;
        t_hi = n_hi;
        if k <= to {
            theta[k] = t.clone();
            ln_inv[k] = l;
            lo[k] = l_lo - 4.0 * f64::EPSILON * l_lo.abs();
            hi[k] = l_hi + 4.0 * f64::EPSILON * l_hi.abs();
        }
    }
    Ok(Tails {
        theta,
        ln_inv,
        ln_inv_lo: lo,
        ln_inv_hi: hi,
    })
}

/// Log-domain Diophantine data for `n = 1 … depth`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiophantineProfile {
    /// Indices `n` of the entries below.
    pub ns: Vec<usize>,
    /// `τₙ = ln(1/|x − pₙ/qₙ|)/ln qₙ`, NaN where `qₙ = 1`.
    pub taus: Vec<f64>,
    /// Running maximum of the finite `τₙ` over the window.
    pub tau_estimate: f64,
    /// `ln βₙ`.
    pub betas: Vec<f64>,
    /// `ln qₙ₊₁`, kept for the sandwich check.
    pub ln_q_next: Vec<f64>,
}

pub fn diophantine_profile(x: &CFNumber, depth: usize) -> Result<DiophantineProfile> {
    if depth < 1 {
        return Err(Error::domain("depth must be at least 1"));
    }
    if let Availability::Terminates(n) = x.availability() {
        if depth >= n {
            return Err(Error::domain(format!(
                "rational with {n} quotients has βₙ = 0 from n = {n}; depth must be below it"
            )));
        }
    }
    let cv = convergents(x, depth + 1)?;
    if (cv.last_index() as usize) < depth + 1 {
        return Err(Error::Exhausted {
            index: depth + 1,
            available: cv.last_index() as usize,
        });
    }
    let t: Tails<f64> = tails(x, depth + 1, 80)?;
    let mut out = DiophantineProfile {
        ns: vec![],
        taus: vec![],
        tau_estimate: f64::NAN,
        betas: vec![],
        ln_q_next: vec![],
    };
    for n in 1..=depth {
        let qn = &cv.get(n as i64).q;
        let qn1 = &cv.get(n as i64 + 1).q;
        let ln_beta = ln_beta_from(qn1, qn, t.theta[n + 1]);
        let ln_q = ln_big(qn);
        let tau = if qn.is_one() { f64::NAN } else { 1.0 - ln_beta / ln_q };
        if tau.is_finite() && !(tau <= out.tau_estimate) {
            out.tau_estimate = tau;
        }
        out.ns.push(n);
        out.taus.push(tau);
        out.betas.push(ln_beta);
        out.ln_q_next.push(ln_big(qn1));
    }
    Ok(out)
}

/// `ln βₙ = −ln(qₙ₊₁ + θₙ₊₁ qₙ)`.
pub(crate) fn ln_beta_from(q_next: &BigUint, q: &BigUint, theta_next: f64) -> f64 {
    -(ln_big(q_next) + (theta_next * ratio_f64(q, q_next)).ln_1p())
}

/// Builds `x` with `a₁ = a1` and `aₙ₊₁ = max(1, ⌊qₙ^(τ−2)⌋)`, so that
/// `qₙ₊₁ ≈ qₙ^(τ−1)` and `τₙ → τ`.
///
/// Non-integer exponents are evaluated in floating point, so for very large
/// `qₙ` only the leading ~50 bits of the quotient follow the rule exactly.
pub fn construct_tau_number(tau: f64, depth: usize, a1: u64) -> Result<CFNumber> {
    if !(tau >= 2.0) || !tau.is_finite() {
        return Err(Error::domain(format!("tau must be a finite real ≥ 2, got {tau}")));
    }
    if a1 == 0 {
        return Err(Error::domain("a1 must be at least 1"));
    }
    let mut quotients = Vec::with_capacity(depth);
    let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
    let e = tau - 2.0;
    for n in 0..depth {
        let a = if n == 0 {
            BigUint::from(a1)
        } else {
            let est_bits = (e * q1.bits() as f64) as u64;
            if q1.bits() + est_bits > RULE_BIT_BUDGET {
                return Err(Error::resource(format!(
                    "tau:{tau} needs q_{} of about {} bits at depth {}, above the {}-bit budget",
                    n + 1,
                    q1.bits() + est_bits,
                    depth,
                    RULE_BIT_BUDGET
                )));
            }
            floor_pow(&q1, e).max(BigUint::one())
        };
        let q2 = &a * &q1 + &q0;
        q0 = std::mem::replace(&mut q1, q2);
        quotients.push(a);
    }
    Ok(CFNumber::wrap(Source::Rule { tau, a1, quotients }))
}

/// Largest depth whose construction stays inside [`RULE_BIT_BUDGET`].
pub fn max_tau_depth(tau: f64, a1: u64) -> usize {
    const CAP: usize = 4096;
    if construct_tau_number(tau, CAP, a1).is_ok() {
        return CAP;
    }
    let (mut lo, mut hi) = (1usize, CAP);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if construct_tau_number(tau, mid, a1).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `⌊q^e⌋` for `e ≥ 0`, exact when `e` is an integer.
fn floor_pow(q: &BigUint, e: f64) -> BigUint {
    if e == 0.0 {
        return BigUint::one();
    }
    if e.fract() == 0.0 && e <= 64.0 {
        return q.pow(e as u32);
    }
    let l2 = e * ln_big(q) / std::f64::consts::LN_2;
    if l2 < 62.0 {
        return BigUint::from(l2.exp2().floor() as u64);
    }
    let ip = l2.floor();
    let mant = ((l2 - ip).exp2() * 2f64.powi(52)).floor() as u64;
    BigUint::from(mant) << (ip as u64 - 52)
}

/// The order-`k` interval of reals whose expansion starts with `b₁…b_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub order: usize,
    pub quotients: Vec<BigUint>,
    pub left: BigRational,
    pub right: BigRational,
}

impl Cylinder {
    pub fn width(&self) -> BigRational {
        &self.right - &self.left
    }

    /// Membership in the open interval.
    pub fn contains(&self, x: &BigRational) -> bool {
        x > &self.left && x < &self.right
    }

    pub fn contains_cylinder(&self, other: &Cylinder) -> bool {
        other.left >= self.left && other.right <= self.right
    }
}

pub fn cylinder(quotients: &[BigUint]) -> Result<Cylinder> {
    if quotients.is_empty() {
        return Err(Error::domain("cylinder needs at least one quotient"));
    }
    if quotients.iter().any(|a| a.is_zero()) {
        return Err(Error::domain("partial quotients must be at least 1"));
    }
    let (mut p0, mut p1) = (BigUint::one(), BigUint::zero());
    let (mut q0, mut q1) = (BigUint::zero(), BigUint::one());
    for a in quotients {
        let p2 = a * &p1 + &p0;
        let q2 = a * &q1 + &q0;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
    }
    let e1 = BigRational::new_raw(BigInt::from(p1.clone()), BigInt::from(q1.clone()));
    let e2 = BigRational::new_raw(BigInt::from(p1 + p0), BigInt::from(q1 + q0));
    let (left, right) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
    Ok(Cylinder {
        order: quotients.len(),
        quotients: quotients.to_vec(),
        left,
        right,
    })
}

/// An exact quadratic irrational `(a + b√d)/c` with `c > 0` and `d` not a
/// perfect square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadSurd {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigUint,
}

impl QuadSurd {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigUint) -> Self {
        assert!(!c.is_zero(), "zero denominator");
        let s = d.sqrt();
        assert!(&s * &s != d, "d must not be a perfect square");
        let mut r = QuadSurd { a, b, c, d };
        r.reduce();
        r
    }

    fn reduce(&mut self) {
        if self.c.is_negative() {
            self.a = -&self.a;
            self.b = -&self.b;
            self.c = -&self.c;
        }
        let g = self.a.gcd(&self.b).gcd(&self.c);
        if !g.is_one() && !g.is_zero() {
            self.a /= &g;
            self.b /= &g;
            self.c /= &g;
        }
    }

    /// Sign of the value.
    pub fn sign(&self) -> Ordering {
        sign_ab(&self.a, &self.b, &self.d)
    }

    /// `ln |value|` without cancellation.
    pub fn ln_abs(&self) -> f64 {
        ln_abs_ab(&self.a, &self.b, &self.d) - ln_big_int(&self.c)
    }

    pub fn to_f64(&self) -> f64 {
        let m = self.ln_abs().exp();
        match self.sign() {
            Ordering::Less => -m,
            Ordering::Equal => 0.0,
            Ordering::Greater => m,
        }
    }

    pub fn floor(&self) -> BigInt {
        let s = BigInt::from((BigInt::from(self.d.clone()) * &self.b * &self.b).magnitude().sqrt());
        let num = if self.b.is_negative() { &self.a - s - 1 } else { &self.a + s };
        num.div_floor(&self.c)
    }

    /// `self − k` for an integer `k`.
    pub fn sub_int(&self, k: &BigInt) -> Self {
        QuadSurd::new(&self.a - k * &self.c, self.b.clone(), self.c.clone(), self.d.clone())
    }

    pub fn recip(&self) -> Self {
        // c/(a + b√d) = c(a − b√d)/(a² − b²d)
        let den = &self.a * &self.a - &self.b * &self.b * BigInt::from(self.d.clone());
        QuadSurd::new(&self.c * &self.a, -(&self.c * &self.b), den, self.d.clone())
    }

    /// One step of the Gauss map, `{1/x}`.
    pub fn gauss(&self) -> Self {
        let r = self.recip();
        let f = r.floor();
        r.sub_int(&f)
    }

    /// `(u + v·x)` as an unreduced surd numerator over `c`.
    fn lin(&self, u: &BigInt, v: &BigInt) -> (BigInt, BigInt) {
        (u * &self.c + v * &self.a, v * &self.b)
    }

    /// `(p + y·pp)/(q + y·qq)` evaluated at `y = self`.
    pub fn mobius(&self, p: &BigInt, pp: &BigInt, q: &BigInt, qq: &BigInt) -> Self {
        let (u1, v1) = self.lin(p, pp);
        let (u2, v2) = self.lin(q, qq);
        let d = BigInt::from(self.d.clone());
        let num_a = &u1 * &u2 - &v1 * &v2 * &d;
        let num_b = &v1 * &u2 - &u1 * &v2;
        let den = &u2 * &u2 - &v2 * &v2 * &d;
        QuadSurd::new(num_a, num_b, den, self.d.clone())
    }

    /// `u·self − v` as a signed pair over `c`: used for `qₙx − pₙ`.
    pub fn affine(&self, u: &BigInt, v: &BigInt) -> (BigInt, BigInt) {
        (u * &self.a - v * &self.c, u * &self.b)
    }
}

fn sign_ab(a: &BigInt, b: &BigInt, d: &BigUint) -> Ordering {
    let sa = a.sign();
    let sb = b.sign();
    match (sa, sb) {
        (Sign::NoSign, Sign::NoSign) => Ordering::Equal,
        (_, Sign::NoSign) => a.cmp(&BigInt::zero()),
        (Sign::NoSign, _) => b.cmp(&BigInt::zero()),
        _ if sa == sb => a.cmp(&BigInt::zero()),
        _ => {
            let a2 = a * a;
            let b2d = b * b * BigInt::from(d.clone());
            let a_wins = a2 > b2d;
            if a_wins {
                a.cmp(&BigInt::zero())
            } else {
                b.cmp(&BigInt::zero())
            }
        }
    }
}

/// `ln |a + b√d|`, rationalizing when the two parts nearly cancel.
fn ln_abs_ab(a: &BigInt, b: &BigInt, d: &BigUint) -> f64 {
    let la = if a.is_zero() { f64::NEG_INFINITY } else { ln_big_int(a) };
    let lb = if b.is_zero() {
        f64::NEG_INFINITY
    } else {
        ln_big_int(b) + 0.5 * ln_big(d)
    };
    if a.sign() == b.sign() || a.is_zero() || b.is_zero() {
        return ln_add_exp(la, lb);
    }
    let prod = a * a - b * b * BigInt::from(d.clone());
    ln_big_int(&prod) - ln_add_exp(la, lb)
}

/// Exact value of `[0; pre…, period…]`.
fn periodic_surd(pre: &[BigUint], period: &[BigUint]) -> QuadSurd {
    let conv = |qs: &[BigUint]| {
        let (mut p0, mut p1) = (BigInt::one(), BigInt::zero());
        let (mut q0, mut q1) = (BigInt::zero(), BigInt::one());
        for a in qs {
            let a = BigInt::from(a.clone());
            let p2 = &a * &p1 + &p0;
            let q2 = &a * &q1 + &q0;
            p0 = std::mem::replace(&mut p1, p2);
            q0 = std::mem::replace(&mut q1, q2);
        }
        (p1, p0, q1, q0)
    };
    // y = (P + yP')/(Q + yQ')  ⇒  Q'y² + (Q − P')y − P = 0
    let (pm, pm1, qm, qm1) = conv(period);
    let bq = &qm - &pm1;
    let disc = &bq * &bq + BigInt::from(4) * &pm * &qm1;
    let d = disc.to_biguint().unwrap();
    let y = QuadSurd::new(-bq, BigInt::one(), BigInt::from(2) * qm1, d);
    if pre.is_empty() {
        return y;
    }
    let (pk, pk1, qk, qk1) = conv(pre);
    y.mobius(&pk, &pk1, &qk, &qk1)
}

/// Exact `βₙ = |qₙx − pₙ|` for a rational or quadratic number, as the pair
/// `(u, v)` with `βₙ = |u + v√d| / c` (`v = 0` and `d = 1` for rationals).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactBeta {
    pub u: BigInt,
    pub v: BigInt,
}

/// Exact `βₙ` for `n = −1 … depth` with the shared denominator and radicand.
pub fn exact_betas(x: &CFNumber, depth: usize) -> Result<Option<(Vec<ExactBeta>, BigInt, BigUint)>> {
    let cv = convergents(x, depth)?;
    let (a, b, c, d) = match x.kind() {
        Kind::Rational => {
            let r = x.as_rational().unwrap();
            (r.numer().clone(), BigInt::zero(), r.denom().clone(), BigUint::one())
        }
        Kind::Quadratic => {
            let s = x.as_surd().unwrap();
            (s.a, s.b, s.c, s.d)
        }
        _ => return Ok(None),
    };
    let mut out = Vec::with_capacity(cv.items.len());
    for conv in &cv.items {
        let q = BigInt::from(conv.q.clone());
        let p = BigInt::from(conv.p.clone());
        let mut u = &q * &a - &p * &c;
        let mut v = &q * &b;
        if sign_ab(&u, &v, &d) == Ordering::Less {
            u = -u;
            v = -v;
        }
        out.push(ExactBeta { u, v });
    }
    Ok(Some((out, c, d)))
}

/// Checks `βₙ₊₁ = βₙ₋₁ − aₙ₊₁βₙ` exactly for `n = 0 … depth−1`.
pub fn check_beta_recursion(x: &CFNumber, depth: usize) -> Result<Option<bool>> {
    let Some((betas, _, _)) = exact_betas(x, depth)? else {
        return Ok(None);
    };
    // betas[i] is β_{i−1}
    for n in 0..depth {
        if n + 2 >= betas.len() {
            break;
        }
        let Some(a) = x.quotient(n + 1)? else { break };
        let a = BigInt::from(a.clone());
        let (bm, b0, bp) = (&betas[n], &betas[n + 1], &betas[n + 2]);
        if bp.u != &bm.u - &a * &b0.u || bp.v != &bm.v - &a * &b0.v {
            return Ok(Some(false));
        }
    }
    Ok(Some(true))
}

/// `|pₙqₙ₋₁ − pₙ₋₁qₙ| = 1` for every consecutive pair.
pub fn check_determinants(cv: &Convergents) -> bool {
    cv.items.windows(2).all(|w| {
        let l = &w[1].p * &w[0].q;
        let r = &w[0].p * &w[1].q;
        let diff = if l > r { l - r } else { r - l };
        diff.is_one()
    })
}

/// Rational from a positive u128 fraction; helper for tests and callers.
pub fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
