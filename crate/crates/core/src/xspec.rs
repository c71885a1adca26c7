//! The textual number grammar shared by the CLI and the C interface:
//!
//! ```text
//! golden | silver | p/q | per:[a1,…;b1,…] | tau:<real> | rand:<seed>:<depth>
//! ```
//!
//! `p/q` may lie outside `(0,1)`; its integer part is split off and reported.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::cf::{construct_tau_number, max_tau_depth, CFNumber};
use crate::error::{Error, Result};

/// First quotient of every `tau:` construction.
pub const TAU_A1: u64 = 2;
/// Depth cap for `tau:` constructions that never reach the bit budget.
pub const TAU_DEPTH_CAP: usize = 400;

#[derive(Debug, Clone)]
pub struct XSpec {
    /// The input text, trimmed.
    pub text: String,
    /// Fractional part in `(0,1)` as a quotient source.
    pub number: CFNumber,
    /// `⌊x⌋`; zero except for `p/q` inputs outside `(0,1)`.
    pub integer_part: BigInt,
}

impl XSpec {
    /// Whether the fractional part has a terminating expansion.
    pub fn is_rational(&self) -> bool {
        self.number.is_rational()
    }
}

impl FromStr for XSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn parse(input: &str) -> Result<XSpec> {
    let text = input.trim().to_string();
    let mut integer_part = BigInt::zero();
    let number = match text.as_str() {
        "golden" => CFNumber::golden(),
        "silver" => CFNumber::silver(),
        t if t.starts_with("per:") => parse_periodic(&t[4..])?,
        t if t.starts_with("tau:") => {
            let tau: f64 = t[4..].trim().parse().map_err(|_| perr(format!("bad tau in {t:?}")))?;
            if !(tau >= 2.0 && tau.is_finite()) {
                return Err(Error::domain(format!("tau must be a finite real ≥ 2, got {tau}")));
            }
            let depth = max_tau_depth(tau, TAU_A1).min(TAU_DEPTH_CAP);
            construct_tau_number(tau, depth, TAU_A1)?
        }
        t if t.starts_with("rand:") => {
            let parts: Vec<&str> = t[5..].split(':').collect();
            let [seed, depth] = parts[..] else {
                return Err(perr(format!("expected rand:<seed>:<depth>, got {t:?}")));
            };
            let seed: u64 = seed.trim().parse().map_err(|_| perr(format!("bad seed in {t:?}")))?;
            let depth: usize = depth.trim().parse().map_err(|_| perr(format!("bad depth in {t:?}")))?;
            if depth == 0 {
                return Err(Error::domain("random depth must be positive"));
            }
            CFNumber::random(seed, depth)
        }
        t if t.contains('/') => {
            let r = parse_rational(t)?;
            let (fl, frac) = split_integer(&r);
            if frac.is_zero() {
                return Err(Error::domain(format!("{t} is an integer; its fractional part is 0")));
            }
            integer_part = fl;
            CFNumber::from_rational(&frac)?
        }
        t => return Err(perr(format!("unrecognized number spec {t:?}"))),
    };
    Ok(XSpec {
        text,
        number,
        integer_part,
    })
}

fn parse_rational(t: &str) -> Result<BigRational> {
    let (p, q) = t.split_once('/').ok_or_else(|| perr(format!("expected p/q, got {t:?}")))?;
    let p: BigInt = p.trim().parse().map_err(|_| perr(format!("bad numerator in {t:?}")))?;
    let q: BigInt = q.trim().parse().map_err(|_| perr(format!("bad denominator in {t:?}")))?;
    if q.is_zero() {
        return Err(Error::domain(format!("zero denominator in {t:?}")));
    }
    if q.is_negative() {
        return Err(perr(format!("denominator must be positive in {t:?}")));
    }
    Ok(BigRational::new(p, q))
}

/// `(⌊r⌋, r − ⌊r⌋)`.
pub fn split_integer(r: &BigRational) -> (BigInt, BigRational) {
    let fl = r.numer().div_floor(r.denom());
    let frac = r - BigRational::from_integer(fl.clone());
    (fl, frac)
}

fn parse_quotients(s: &str) -> Result<Vec<BigUint>> {
    s.split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty())
        .map(|a| a.parse::<BigUint>().map_err(|_| perr(format!("bad partial quotient {a:?}"))))
        .collect()
}

fn parse_periodic(body: &str) -> Result<CFNumber> {
    let inner = body
        .trim()
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| perr(format!("expected per:[pre;period], got per:{body}")))?;
    let (pre, period) = inner
        .split_once(';')
        .ok_or_else(|| perr("periodic spec needs a ';' between preperiod and period"))?;
    let pre = parse_quotients(pre)?;
    let period = parse_quotients(period)?;
    if period.is_empty() {
        return Err(perr("period must be nonempty"));
    }
    CFNumber::periodic(pre, period)
}
