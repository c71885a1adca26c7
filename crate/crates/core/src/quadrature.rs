//! Integration of `B` across its logarithmic singularities, which sit at
//! every rational.
//!
//! All nodes live on the grid `{m/D}` with `D = M·2⁶⁴` and `M = 2⁶¹−1`
//! prime. A node numerator that is a multiple of `M` is nudged by one, so
//! every node has reduced denominator at least `M` and never lands on a
//! low-denominator rational. `B` at a node is the series of that rational
//! truncated at the last `k` with `qₖ ≤ √den`, which agrees with `B` on a
//! neighborhood of the node up to `4·ln(qₖ₊₁)/qₖ₊₁`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::brjuno::eval_btilde;
use crate::cf::{convergents, CFNumber};
use crate::error::{Error, Result};

/// The Mersenne prime `2⁶¹ − 1`.
pub const GRID_PRIME: u128 = (1u128 << 61) - 1;
/// Grid denominator `D = (2⁶¹−1)·2⁶⁴`.
pub const GRID_DEN: u128 = GRID_PRIME << 64;
const GRID_DEN_I: i128 = GRID_DEN as i128;
const GRID_DEN_F: f64 = GRID_DEN as f64;

/// Rationals with denominator up to this get forced refinement when they
/// fall inside an integration interval.
pub const FORCED_Q: u64 = 64;

/// Multiple of the sampled level difference reported as the error.
pub const ERROR_SAFETY: f64 = 2.0;
/// Endpoints that are rationals with denominator up to this are graded
/// toward as singular points.
const SINGULAR_ENDPOINT_Q: u64 = 1 << 20;
/// Geometric grading levels toward a singular point.
const GRADING_LEVELS: u32 = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub left: BigRational,
    pub right: BigRational,
}

impl Interval {
    /// An interval inside (0,1), or a wrapped piece of one period inside
    /// (−1, 2) of length at most 1.
    pub fn new(left: BigRational, right: BigRational) -> Result<Self> {
        if left >= right {
            return Err(Error::domain(format!("empty interval ({left}, {right})")));
        }
        let one = BigRational::one();
        if &right - &left > one || left < -one.clone() || right > BigRational::from_integer(BigInt::from(2)) {
            return Err(Error::domain("interval must span at most one period inside (−1, 2)"));
        }
        Ok(Interval { left, right })
    }

    /// Interval with endpoints converted exactly from floats.
    pub fn from_f64(left: f64, right: f64) -> Result<Self> {
        let l = BigRational::from_float(left).ok_or_else(|| Error::domain("non-finite endpoint"))?;
        let r = BigRational::from_float(right).ok_or_else(|| Error::domain("non-finite endpoint"))?;
        Self::new(l, r)
    }

    pub fn length(&self) -> f64 {
        (&self.right - &self.left).to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    /// Two-level difference of the final mesh on resampled halves (the
    /// larger of its total and its root-sum-square over cells) times
    /// [`ERROR_SAFETY`], plus the committed node truncation error.
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Deepest bisection level reached below the initial mesh.
    pub max_depth: u32,
    /// False when the evaluation budget ran out before `error_estimate ≤ tol`.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Seed of the per-cell node positions, in `(0,1)`; runs with different
    /// offsets use different node sets.
    pub offset: f64,
    pub max_evals: usize,
    pub min_levels: u32,
    /// Uniform cells in the initial mesh.
    pub base_cells: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            offset: 0.5,
            max_evals: 1 << 22,
            min_levels: 2,
            base_cells: 64,
        }
    }
}

/// Node value of `B` at `m/D` and its committed truncation error.
pub fn node_b(m: u128) -> (f64, f64) {
    let g = gcd(m, GRID_DEN);
    let r0 = GRID_DEN / g;
    let mut a = r0;
    let mut b = m / g;
    let sq = isqrt(r0);
    let r0f = r0 as f64;
    let (mut q_prev, mut q) = (0u128, 1u128);
    let mut sum = 0.0;
    while b != 0 {
        let (quot, rem) = divrem(a, b);
        let l = if quot == 1 {
            ((a - b) as f64 / b as f64).ln_1p()
        } else {
            (a as f64 / b as f64).ln()
        };
        sum += (a as f64 / r0f) * l;
        let q_next = quot.saturating_mul(q).saturating_add(q_prev);
        if q_next > sq {
            let qn = q_next as f64;
            return (sum, 4.0 * qn.ln() / qn);
        }
        q_prev = q;
        q = q_next;
        a = b;
        b = rem;
    }
    (sum, 0.0)
}

/// Per-term node values `γ₀ … γ_{k_max}` at `m/D`, zero past the truncation.
pub fn node_terms(m: u128, k_max: usize) -> Vec<f64> {
    let g = gcd(m, GRID_DEN);
    let r0 = GRID_DEN / g;
    let (mut a, mut b) = (r0, m / g);
    let sq = isqrt(r0);
    let (mut q_prev, mut q) = (0u128, 1u128);
    let mut out = vec![0.0; k_max + 1];
    for slot in out.iter_mut() {
        if b == 0 {
            break;
        }
        let (quot, rem) = divrem(a, b);
        let l = if quot == 1 {
            ((a - b) as f64 / b as f64).ln_1p()
        } else {
            (a as f64 / b as f64).ln()
        };
        *slot = (a as f64 / r0 as f64) * l;
        let q_next = quot.saturating_mul(q).saturating_add(q_prev);
        if q_next > sq {
            break;
        }
        q_prev = q;
        q = q_next;
        a = b;
        b = rem;
    }
    out
}

#[inline]
fn divrem(a: u128, b: u128) -> (u128, u128) {
    if a < b.saturating_mul(2) {
        return (1, a - b);
    }
    if a <= u64::MAX as u128 {
        let (a, b) = (a as u64, b as u64);
        return ((a / b) as u128, (a % b) as u128);
    }
    (a / b, a % b)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn isqrt(n: u128) -> u128 {
    let mut x = (n as f64).sqrt() as u128;
    while x.saturating_mul(x) > n {
        x -= 1;
    }
    while (x + 1).saturating_mul(x + 1) <= n {
        x += 1;
    }
    x
}

/// Node numerator for grid position `pos` (any integer), wrapped into one
/// period and nudged off multiples of `M`.
#[inline]
pub(crate) fn node_numerator(pos: i128) -> u128 {
    let mut m = pos.rem_euclid(GRID_DEN_I) as u128;
    if m % GRID_PRIME == 0 {
        m += 1;
    }
    m
}

/// `⌊x·D⌋` for an exact rational.
pub(crate) fn grid_floor(x: &BigRational) -> i128 {
    let v = (x.numer() * BigInt::from(GRID_DEN)).div_floor(x.denom());
    v.to_i128().expect("grid position in range")
}

/// Grid position of an arbitrary number, exact to one unit.
pub fn grid_position(x: &CFNumber) -> Result<i128> {
    if let Some(r) = x.as_rational() {
        return Ok(grid_floor(&r));
    }
    // a convergent with q² > 2·D is within half a grid unit
    let cv = convergents(x, x.depth_available().unwrap_or(400).min(400))?;
    for c in &cv.items[2..] {
        if c.q.bits() >= 64 {
            let r = BigRational::new(BigInt::from(c.p.clone()), BigInt::from(c.q.clone()));
            return Ok(grid_floor(&r));
        }
    }
    Err(Error::Exhausted {
        index: cv.last_index() as usize + 1,
        available: cv.last_index() as usize,
    })
}

/// Grid units for a length given as a float.
pub(crate) fn units(len: f64) -> i128 {
    (len * GRID_DEN_F).round() as i128
}

pub(crate) fn to_real(units: i128) -> f64 {
    units as f64 / GRID_DEN_F
}

/// Grid positions of the rationals with denominator at most `qmax` in
/// `[lo, hi]`.
pub(crate) fn small_rationals(lo: i128, hi: i128, qmax: u64) -> Vec<(i128, u64)> {
    let mut out = Vec::new();
    let (lf, hf) = (to_real(lo), to_real(hi));
    for q in 1..=qmax {
        let p0 = (lf * q as f64).floor() as i64 - 1;
        let p1 = (hf * q as f64).ceil() as i64 + 1;
        for p in p0..=p1 {
            if num_integer::gcd(p.unsigned_abs(), q) != 1 {
                continue;
            }
            let pos = rational_pos(p, q);
            if pos >= lo && pos <= hi {
                out.push((pos, q));
            }
        }
    }
    out.sort();
    out.dedup_by_key(|e| e.0);
    out
}

/// Grid position of `p/q`, rounded down.
pub(crate) fn rational_pos(p: i64, q: u64) -> i128 {
    let d = GRID_DEN_I;
    let q = q as i128;
    let p = p as i128;
    (d / q) * p + ((d % q) * p).div_euclid(q)
}

/// `⌊len·i/n⌋` without overflowing for lengths near `D`.
#[inline]
pub(crate) fn split_point(len: i128, i: i128, n: i128) -> i128 {
    (len / n) * i + (len % n) * i / n
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: i128,
    hi: i128,
    coarse: f64,
    /// Halves `[lo, mid]` and `[mid, hi]`; `None` below four grid units.
    fine: Option<(f64, f64)>,
    level: u32,
}

impl Cell {
    fn mid(&self) -> i128 {
        self.lo + (self.hi - self.lo) / 2
    }

    fn value(&self) -> f64 {
        self.fine.map_or(self.coarse, |(l, r)| l + r)
    }

    fn signed_diff(&self) -> f64 {
        self.fine.map_or(0.0, |(l, r)| l + r - self.coarse)
    }

    fn diff(&self) -> f64 {
        self.signed_diff().abs()
    }
}

struct Integrator<'a> {
    opts: &'a QuadOptions,
    evals: usize,
    tails: f64,
    salt: u64,
}

impl Integrator<'_> {
    fn halves(&mut self, lo: i128, hi: i128) -> Option<(f64, f64)> {
        if hi - lo < 4 {
            return None;
        }
        let mid = lo + (hi - lo) / 2;
        Some((self.eval_cell(lo, mid), self.eval_cell(mid, hi)))
    }

    fn eval_cell(&mut self, lo: i128, hi: i128) -> f64 {
        let w = (hi - lo) as f64;
        let off = ((hi - lo) as f64 * jitter(lo, hi, self.opts.offset, self.salt)) as i128;
        let pos = (lo + off.clamp(0, hi - lo - 1)).max(lo);
        let (v, t) = node_b(node_numerator(pos));
        self.evals += 1;
        self.tails += t * w / GRID_DEN_F;
        v * w / GRID_DEN_F
    }
}

/// Node position inside cell `[lo, hi]` as a fraction of its width, hashed
/// from the cell, the run offset and the pass. Fixed fractions put nodes on
/// rationals of low height, which sample the logarithmic spikes of nearby
/// rationals unevenly and bias the sum low.
fn jitter(lo: i128, hi: i128, offset: f64, salt: u64) -> f64 {
    let mut z = (lo as u64)
        ^ (hi as u64).rotate_left(29)
        ^ ((lo >> 64) as u64).rotate_left(47)
        ^ offset.to_bits().rotate_left(13)
        ^ salt.wrapping_mul(0xd6e8_feb8_6659_fd93);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64
}

/// Geometrically graded cells from `s` (singular) toward `e`.
fn graded(s: i128, e: i128, out: &mut Vec<(i128, i128)>) {
    let sign = if e > s { 1 } else { -1 };
    let len = (e - s).abs();
    let mut inner = len;
    let mut cells = Vec::new();
    for _ in 0..GRADING_LEVELS {
        let next = inner / 2;
        if next < 4 {
            break;
        }
        cells.push((s + sign * next, s + sign * inner));
        inner = next;
    }
    cells.push((s, s + sign * inner));
    for (a, b) in cells {
        out.push(if a < b { (a, b) } else { (b, a) });
    }
}

fn initial_mesh(lo: i128, hi: i128, singular: &[i128], base: usize) -> Vec<(i128, i128)> {
    let mut breaks: Vec<i128> = Vec::with_capacity(base + singular.len() + 1);
    let base = base.max(1) as i128;
    let len = hi - lo;
    for i in 0..=base {
        breaks.push(lo + split_point(len, i, base));
    }
    let interior: Vec<i128> = singular.iter().copied().filter(|&s| s >= lo && s <= hi).collect();
    breaks.extend(interior.iter().copied());
    breaks.sort();
    breaks.dedup();
    let is_sing = |p: i128| interior.binary_search(&p).is_ok();
    let mut cells = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 8 {
            cells.push((a, b));
            continue;
        }
        match (is_sing(a), is_sing(b)) {
            (false, false) => cells.push((a, b)),
            (true, false) => graded(a, b, &mut cells),
            (false, true) => graded(b, a, &mut cells),
            (true, true) => {
                let m = a + (b - a) / 2;
                graded(a, m, &mut cells);
                graded(b, m, &mut cells);
            }
        }
    }
    cells.sort();
    cells
}

/// Adaptive integral of `B` over grid units `[lo, hi]` with forced grading
/// toward `singular` positions.
///
/// Cells whose two-level difference is at least the mean are bisected until
/// the level difference meets `tol`. The halves are then resampled with an
/// independent node set and the result is judged on those: the refinement
/// decisions depend on the first set, which would otherwise bias the sum
/// toward cells whose nodes missed nearby singularities.
pub(crate) fn integrate_units(lo: i128, hi: i128, singular: &[i128], tol: f64, opts: &QuadOptions) -> QuadratureResult {
    let mut sing: Vec<i128> = singular.to_vec();
    sing.sort();
    sing.dedup();
    let mut it = Integrator {
        opts,
        evals: 0,
        tails: 0.0,
        salt: 0,
    };
    let mut cells: Vec<Cell> = initial_mesh(lo, hi, &sing, opts.base_cells)
        .into_iter()
        .map(|(a, b)| Cell {
            lo: a,
            hi: b,
            coarse: it.eval_cell(a, b),
            fine: it.halves(a, b),
            level: 0,
        })
        .collect();
    let mut level = 0u32;
    let mut max_depth = 0u32;
    let mut audited = false;
    loop {
        level += 1;
        let err = level_error(&cells) + it.tails;
        let exhausted = it.evals >= opts.max_evals || cells.iter().all(|c| c.diff() == 0.0);
        if (level > opts.min_levels && err <= tol) || exhausted {
            if audited {
                return QuadratureResult {
                    value: cells.iter().map(Cell::value).sum(),
                    error_estimate: err,
                    evaluations: it.evals,
                    max_depth,
                    converged: err <= tol,
                };
            }
            // resample the halves of the final mesh and judge those
            it.salt += 1;
            for c in cells.iter_mut() {
                c.fine = it.halves(c.lo, c.hi);
            }
            audited = true;
            continue;
        }
        audited = false;
        let mean = cells.iter().map(Cell::diff).sum::<f64>() / cells.len() as f64;
        let mut next = Vec::with_capacity(cells.len() * 2);
        for c in &cells {
            match c.fine {
                Some((l, r)) if c.diff() >= mean => {
                    let mid = c.mid();
                    for (a, b, v) in [(c.lo, mid, l), (mid, c.hi, r)] {
                        next.push(Cell {
                            lo: a,
                            hi: b,
                            coarse: v,
                            fine: it.halves(a, b),
                            level: c.level + 1,
                        });
                    }
                    max_depth = max_depth.max(c.level + 1);
                }
                _ => next.push(*c),
            }
        }
        cells = next;
    }
}

/// Level difference of a mesh, the larger of its total and its
/// root-sum-square over cells, times [`ERROR_SAFETY`]. Cell errors are
/// zero-mean under jittered nodes, so the root-sum-square is their scale.
fn level_error(cells: &[Cell]) -> f64 {
    let signed: f64 = cells.iter().map(Cell::signed_diff).sum();
    let rss = cells.iter().map(|c| c.signed_diff().powi(2)).sum::<f64>().sqrt();
    ERROR_SAFETY * signed.abs().max(rss)
}

fn check_tol(tol: f64, len: f64) -> Result<()> {
    if !(tol > 0.0) || tol < 1e-8 * len {
        return Err(Error::domain(format!(
            "tol {tol:e} must be positive and at least 1e-8·|I| = {:e}",
            1e-8 * len
        )));
    }
    Ok(())
}

/// Grid positions of rational endpoints with small denominators.
fn singular_endpoints(i: &Interval) -> Vec<i128> {
    let mut out = Vec::new();
    for e in [&i.left, &i.right] {
        if e.denom().magnitude() <= &num_bigint::BigUint::from(SINGULAR_ENDPOINT_Q) {
            out.push(grid_floor(e));
        }
    }
    out
}

/// `∫_I B` with error estimate.
pub fn integrate_b(i: &Interval, tol: f64) -> Result<QuadratureResult> {
    integrate_b_with(i, tol, &QuadOptions::default())
}

pub fn integrate_b_with(i: &Interval, tol: f64, opts: &QuadOptions) -> Result<QuadratureResult> {
    let len = i.length();
    if len < 1e-12 {
        return Err(Error::domain(format!("interval length {len:e} below 1e-12")));
    }
    check_tol(tol, len)?;
    if !(opts.offset > 0.0 && opts.offset < 1.0) {
        return Err(Error::domain("node offset must lie strictly inside (0,1)"));
    }
    let lo = grid_floor(&i.left);
    let hi = grid_floor(&i.right);
    let mut sing = singular_endpoints(i);
    sing.extend(small_rationals(lo, hi, FORCED_Q).into_iter().map(|e| e.0));
    Ok(integrate_units(lo, hi, &sing, tol, opts))
}

/// The two-term model `ln(e/(q²|h|))/q + B̃(r)` of the average of `B` over
/// `(r, r+h)` (or `(r+h, r)` for negative `h`), valid for `|h| ≤ 2/(3q²)`.
pub fn average_formula_bm(r: &BigRational, h: f64) -> Result<f64> {
    let q = r.denom().to_f64().unwrap_or(f64::INFINITY);
    let limit = 2.0 / (3.0 * q * q);
    if !(h != 0.0 && h.abs() <= limit) {
        return Err(Error::domain(format!("|h| = {:e} outside (0, 2/(3q²)] = (0, {limit:e}]", h.abs())));
    }
    let frac = r - BigRational::from_integer(r.floor().to_integer());
    let bt = if frac.is_zero() {
        0.0
    } else {
        eval_btilde(&frac)?
    };
    Ok((std::f64::consts::E / (q * q * h.abs())).ln() / q + bt)
}

/// Local `L^p` oscillation `M_p(ρ)` on `[x₀−ρ, x₀+ρ]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalOscillation {
    pub value: f64,
    /// The constant subtracted: given, or the discrete minimizer.
    pub d: f64,
    /// Difference between the two grid levels.
    pub error_estimate: f64,
    pub evaluations: usize,
    /// `ρ` as realized on the grid.
    pub rho: f64,
}

/// Nodes per window at the finer of the two oscillation levels.
pub const OSC_NODES: usize = 1 << 14;

pub fn local_oscillation(x0: &CFNumber, rho: f64, p: f64, d: Option<f64>) -> Result<LocalOscillation> {
    let c = grid_position(x0)?;
    local_oscillation_at(c, rho, p, d, OSC_NODES)
}

pub(crate) fn check_osc_args(rho: f64, p: f64) -> Result<()> {
    if !(rho > 1e-7 && rho < 0.1) {
        return Err(Error::domain(format!("rho {rho:e} outside (1e-7, 0.1)")));
    }
    if p != 1.0 && p != 2.0 {
        return Err(Error::domain(format!("p = {p} unsupported; use 1 or 2")));
    }
    Ok(())
}

/// Midpoint node values of `B` on `n` equal cells of `[lo, hi]`.
pub(crate) fn uniform_nodes(lo: i128, hi: i128, n: usize) -> Vec<f64> {
    let n_i = n as i128;
    let len = hi - lo;
    (0..n_i)
        .map(|i| {
            let a = lo + split_point(len, i, n_i);
            let b = lo + split_point(len, i + 1, n_i);
            node_b(node_numerator(a + (b - a) / 2)).0
        })
        .collect()
}

/// `(M_p, D)` of equally weighted samples; `D` is the median for `p = 1`
/// and the mean for `p = 2` unless given.
pub(crate) fn oscillation_of(values: &[f64], p: f64, d: Option<f64>) -> (f64, f64) {
    let n = values.len() as f64;
    let d = d.unwrap_or_else(|| {
        if p == 1.0 {
            median(values)
        } else {
            values.iter().sum::<f64>() / n
        }
    });
    let s: f64 = values.iter().map(|v| (v - d).abs().powf(p)).sum::<f64>() / n;
    (s.powf(1.0 / p), d)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub(crate) fn local_oscillation_at(c: i128, rho: f64, p: f64, d: Option<f64>, nodes: usize) -> Result<LocalOscillation> {
    check_osc_args(rho, p)?;
    let r = units(rho);
    let (lo, hi) = (c - r, c + r);
    let coarse = uniform_nodes(lo, hi, nodes / 2);
    let fine = uniform_nodes(lo, hi, nodes);
    let (m0, _) = oscillation_of(&coarse, p, d);
    let (m1, d1) = oscillation_of(&fine, p, d);
    Ok(LocalOscillation {
        value: m1,
        d: d1,
        error_estimate: (m1 - m0).abs(),
        evaluations: coarse.len() + fine.len(),
        rho: to_real(r),
    })
}

/// Haar coefficient `C_B(a,b) = (1/a)(∫_b^{b+a/2} B − ∫_{b+a/2}^{b+a} B)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Smallest Haar scale; each half stays above the `1e-12` interval floor.
pub const HAAR_MIN_SCALE: f64 = 2e-12;

pub fn haar_cwt(a: f64, b: &BigRational) -> Result<HaarResult> {
    if !(a >= HAAR_MIN_SCALE && a < 0.1) {
        return Err(Error::domain(format!("scale a = {a:e} outside [{HAAR_MIN_SCALE:e}, 0.1)")));
    }
    let q = b.denom().to_f64().unwrap_or(f64::INFINITY).min(1e6);
    let tol = a * 1e-3 / q;
    let half = BigRational::from_float(a / 2.0).unwrap();
    let full = BigRational::from_float(a).unwrap();
    let i1 = Interval::new(b.clone(), b + &half)?;
    let i2 = Interval::new(b + &half, b + &full)?;
    let opts = QuadOptions::default();
    let r1 = integrate_b_with(&i1, tol, &opts)?;
    let r2 = integrate_b_with(&i2, tol, &opts)?;
    Ok(HaarResult {
        value: (r1.value - r2.value) / a,
        error_estimate: (r1.error_estimate + r2.error_estimate) / a,
        evaluations: r1.evaluations + r2.evaluations,
    })
}

/// `∫_I γₖ` for `k = 0 … k_max` by a uniform midpoint rule on `n` cells.
pub fn integrate_terms(i: &Interval, k_max: usize, n: usize) -> Result<Vec<f64>> {
    let lo = grid_floor(&i.left);
    let hi = grid_floor(&i.right);
    let n_i = n.max(1) as i128;
    let w = to_real(hi - lo) / n as f64;
    let mut acc = vec![0.0; k_max + 1];
    for j in 0..n_i {
        let a = lo + split_point(hi - lo, j, n_i);
        let b = lo + split_point(hi - lo, j + 1, n_i);
        for (s, t) in acc.iter_mut().zip(node_terms(node_numerator(a + (b - a) / 2), k_max)) {
            *s += t * w;
        }
    }
    Ok(acc)
}

/// Sign-aware helper for callers working with `BigRational` offsets.
pub(crate) fn rational_from_units(u: i128) -> BigRational {
    BigRational::new(BigInt::from(u), BigInt::from(GRID_DEN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::ratio;
    use proptest::prelude::*;

    #[test]
    fn grid_constants() {
        assert_eq!(GRID_DEN % GRID_PRIME, 0);
        assert!(GRID_DEN < (1u128 << 125));
        assert_eq!(node_numerator(0), 1);
        assert_eq!(node_numerator(GRID_PRIME as i128 * 5), GRID_PRIME * 5 + 1);
        assert_eq!(node_numerator(-1), GRID_DEN - 1);
    }

    #[test]
    fn gcd_and_isqrt() {
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(gcd(0, 7), 7);
        assert_eq!(gcd(GRID_DEN, 1 << 70), 1 << 64);
        for n in [0u128, 1, 15, 16, 17, (1 << 100) + 12345] {
            let s = isqrt(n);
            assert!(s * s <= n && (s + 1) * (s + 1) > n);
        }
    }

    #[test]
    fn node_value_matches_series_near_golden() {
        let g = crate::cf::CFNumber::golden();
        let pos = grid_position(&g).unwrap();
        let (v, tail) = node_b(node_numerator(pos));
        let b = crate::brjuno::eval_b(&g, 1e-12).unwrap().value;
        assert!((v - b).abs() < 1e-8, "{v} vs {b}");
        assert!(tail < 1e-15);
    }

    #[test]
    fn node_value_off_singularity() {
        // 1/2 + 1e-6 lies in the cylinder [2, ~5e5]: B ≈ ln 2 + (1/2)·ln(1/(4·1e-6))
        let pos = rational_pos(1, 2) + units(1e-6);
        let (v, _) = node_b(node_numerator(pos));
        let approx = 2f64.ln() + 0.5 * (1.0f64 / (4.0 * 1e-6)).ln();
        assert!((v - approx).abs() < 0.1, "{v} {approx}");
    }

    #[test]
    fn node_terms_sum_to_node_value() {
        let m = node_numerator(units(0.3141592653589793));
        let terms = node_terms(m, 200);
        let (v, _) = node_b(m);
        assert!((terms.iter().sum::<f64>() - v).abs() < 1e-13);
    }

    #[test]
    fn small_rationals_in_unit_interval() {
        let r = small_rationals(1, GRID_DEN_I - 1, 5);
        // Farey sequence of order 5 minus 0/1 and 1/1
        assert_eq!(r.len(), 9);
        assert!(r.iter().any(|&(p, q)| q == 2 && p == rational_pos(1, 2)));
    }

    #[test]
    fn interval_validation() {
        assert!(Interval::new(ratio(1, 2), ratio(1, 3)).is_err());
        assert!(Interval::from_f64(-0.5, 0.4).is_ok());
        assert!(Interval::from_f64(0.0, 1.5).is_err());
        assert!(Interval::from_f64(0.2, f64::NAN).is_err());
        let tiny = Interval::from_f64(0.3, 0.3 + 1e-13).unwrap();
        assert!(integrate_b(&tiny, 1.0).is_err());
        let i = Interval::from_f64(0.25, 0.75).unwrap();
        assert!(integrate_b(&i, 1e-12).is_err());
        assert!(integrate_b(&i, 0.0).is_err());
    }

    #[test]
    fn constant_part_of_average_near_rational() {
        // (1/h)∫_{1/2}^{1/2+h} B vs the two-term model
        let h = 1e-4;
        let i = Interval::new(ratio(1, 2), ratio(1, 2) + BigRational::from_float(h).unwrap()).unwrap();
        let r = integrate_b(&i, 1e-9).unwrap();
        let model = average_formula_bm(&ratio(1, 2), h).unwrap();
        let bound = 10.0 * 2.0 * h * (1.0 / (4.0 * h)).ln();
        assert!((r.value / h - model).abs() <= bound, "{} {model}", r.value / h);
    }

    #[test]
    fn bm_formula_examples() {
        let v = average_formula_bm(&ratio(1, 2), 1e-4).unwrap();
        assert!((v - (0.5 * (1.0 + 2500f64.ln()) + 2f64.ln())).abs() < 1e-12);
        assert!((v - 5.105170).abs() < 1e-6);
        let r = ratio(1, 3);
        let h = 1e-3;
        let d = average_formula_bm(&r, h / 2.0).unwrap() - average_formula_bm(&r, h).unwrap();
        assert!((d - 2f64.ln() / 3.0).abs() < 1e-14);
        let q = 7.0;
        let edge = 2.0 / (3.0 * q * q);
        assert!(average_formula_bm(&ratio(3, 7), edge).is_ok());
        assert!(average_formula_bm(&ratio(3, 7), -edge).is_ok());
        assert!(average_formula_bm(&ratio(3, 7), edge * (1.0 + 1e-12)).is_err());
        assert!(average_formula_bm(&ratio(3, 7), 0.0).is_err());
    }

    #[test]
    fn oscillation_of_constant_shift() {
        let v = vec![1.0, 2.0, 3.0, 10.0];
        let (m, d) = oscillation_of(&v, 1.0, None);
        assert_eq!(d, 2.5);
        assert_eq!(m, (1.5 + 0.5 + 0.5 + 7.5) / 4.0);
        let (m2, d2) = oscillation_of(&v, 2.0, None);
        assert_eq!(d2, 4.0);
        assert!((m2 - ((9.0 + 4.0 + 1.0 + 36.0) / 4.0f64).sqrt()).abs() < 1e-15);
        let (mh, _) = oscillation_of(&v, 1.0, Some(1e6));
        assert!((mh - (1e6 - 4.0)).abs() < 1e-9);
    }

    #[test]
    fn oscillation_argument_errors() {
        let g = crate::cf::CFNumber::golden();
        assert!(local_oscillation(&g, 0.2, 1.0, None).is_err());
        assert!(local_oscillation(&g, 1e-8, 1.0, None).is_err());
        assert!(local_oscillation(&g, 1e-3, 3.0, None).is_err());
    }

    #[test]
    fn huge_constant_dominates() {
        let g = crate::cf::CFNumber::golden();
        let o = local_oscillation(&g, 1e-3, 1.0, Some(1e6)).unwrap();
        assert!((o.value / 1e6 - 1.0).abs() < 1e-5);
    }

    #[test]
    fn haar_argument_errors() {
        assert!(haar_cwt(0.5, &ratio(1, 2)).is_err());
        assert!(haar_cwt(1e-12, &ratio(1, 2)).is_err());
    }

    #[test]
    fn haar_of_constant_vanishes() {
        // same mesh on both halves of a translated constant: node values are
        // replaced by 1 through the uniform rule
        let lo = rational_pos(1, 3);
        let r = units(1e-3);
        let left: f64 = uniform_nodes(lo, lo + r, 64).iter().map(|_| 1.0).sum();
        let right: f64 = uniform_nodes(lo + r, lo + 2 * r, 64).iter().map(|_| 1.0).sum();
        assert_eq!(left - right, 0.0);
    }

    #[test]
    fn grid_floor_of_simple_rationals() {
        assert_eq!(grid_floor(&ratio(1, 2)), rational_pos(1, 2));
        assert_eq!(grid_floor(&ratio(1, 3)), rational_pos(1, 3));
        assert_eq!(rational_from_units(rational_pos(1, 4)), ratio(1, 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn additivity(a in 0.05f64..0.45, w in 0.01f64..0.2, split in 0.2f64..0.8) {
            let b = a + w;
            let m = a + w * split;
            let tol = 1e-3 * w;
            let whole = integrate_b(&Interval::from_f64(a, b).unwrap(), tol).unwrap();
            let p1 = integrate_b(&Interval::from_f64(a, m).unwrap(), tol).unwrap();
            let p2 = integrate_b(&Interval::from_f64(m, b).unwrap(), tol).unwrap();
            let err = whole.error_estimate + p1.error_estimate + p2.error_estimate;
            prop_assert!((whole.value - p1.value - p2.value).abs() <= 2.0 * err.max(tol),
                "{} vs {} ± {}", whole.value, p1.value + p2.value, err);
        }
    }
}
