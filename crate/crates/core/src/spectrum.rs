//! The analytic 1-spectrum `D(H) = 2H`, the Jarník dimension map and a
//! coarse-grained empirical spectrum from random samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::cf::CFNumber;
use crate::error::{Error, Result};
use crate::quadrature::{grid_position, local_oscillation_at};

/// Value of a spectrum: a dimension in `[0, 1]` or `−∞` for empty level sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Dim {
    Finite(f64),
    NegInfinity,
}

impl Dim {
    pub fn to_f64(self) -> f64 {
        match self {
            Dim::Finite(d) => d,
            Dim::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPoint {
    #[serde(rename = "H")]
    pub h: f64,
    pub dim: Dim,
}

pub fn analytic_spectrum(h: f64) -> Dim {
    if (0.0..=0.5).contains(&h) {
        Dim::Finite(2.0 * h)
    } else {
        Dim::NegInfinity
    }
}

pub fn spectrum_point(h: f64) -> SpectrumPoint {
    SpectrumPoint {
        h,
        dim: analytic_spectrum(h),
    }
}

/// `2/τ`, the dimension of the points with irrationality exponent `τ`.
pub fn jarnik_dim(tau: f64) -> Result<f64> {
    if tau.is_nan() || tau < 2.0 {
        return Err(Error::domain(format!("tau = {tau} is below the Dirichlet floor 2")));
    }
    Ok(2.0 / tau)
}

pub const BIN_WIDTH: f64 = 0.05;
pub const N_BINS: usize = 11;
pub const MAX_SAMPLES: usize = 4096;
/// The two scales of the cheap slope are `2^{−(j∓HALF_WINDOW)}`.
pub const HALF_WINDOW: i32 = 9;
/// Default center scale of the cheap slope.
pub const DEFAULT_SCALE_J: i32 = 13;
/// Nodes per oscillation estimate at the finer level.
pub const SPECTRUM_NODES: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub h_center: f64,
    pub count: usize,
    /// `ln(count)/(j ln 2)` clamped to `[0,1]`; absent for empty bins.
    pub coarse_dim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    pub bins: Vec<Bin>,
    pub n_samples: usize,
    pub depth: usize,
    pub scale_j: i32,
    pub seed: u64,
    /// Estimates below 0.
    pub underflow: usize,
    /// Estimates at or above `N_BINS·BIN_WIDTH`.
    pub overflow: usize,
    /// Samples whose estimate failed.
    pub failures: usize,
    /// Per-sample estimates in draw order; `None` marks a failure.
    pub estimates: Vec<Option<f64>>,
}

impl EmpiricalSpectrum {
    /// Fraction of samples with estimate in `[lo, hi)`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let k = self.estimates.iter().flatten().filter(|&&h| h >= lo && h < hi).count();
        k as f64 / self.n_samples as f64
    }

    pub fn bin_of(&self, h: f64) -> Option<&Bin> {
        bin_index(h).map(|i| &self.bins[i])
    }
}

fn bin_index(h: f64) -> Option<usize> {
    if !(h >= 0.0) {
        return None;
    }
    let i = (h / BIN_WIDTH).floor() as usize;
    (i < N_BINS).then_some(i)
}

fn check_args(n: usize, j: i32) -> Result<()> {
    if n == 0 || n > MAX_SAMPLES {
        return Err(Error::domain(format!("n = {n} must lie in 1..={MAX_SAMPLES}")));
    }
    if j - HALF_WINDOW < 4 || j + HALF_WINDOW > 23 {
        return Err(Error::domain(format!(
            "scale j = {j} needs j ± {HALF_WINDOW} within [4, 23]"
        )));
    }
    Ok(())
}

/// Cheap `h¹` estimate from `M₁` at `2^{−(j−w)}` and `2^{−(j+w)}`.
pub fn two_scale_slope(x: &CFNumber, j: i32) -> Result<f64> {
    slope_between(x, j - HALF_WINDOW, j + HALF_WINDOW, SPECTRUM_NODES)
}

/// Slope of `ln M₁` between `ρ = 2^{−j₁}` and `ρ = 2^{−j₂}`.
pub fn slope_between(x: &CFNumber, j1: i32, j2: i32, nodes: usize) -> Result<f64> {
    let c = grid_position(x)?;
    let (r1, r2) = (2f64.powi(-j1), 2f64.powi(-j2));
    let m1 = local_oscillation_at(c, r1, 1.0, None, nodes)?.value;
    let m2 = local_oscillation_at(c, r2, 1.0, None, nodes)?.value;
    if !(m1 > 0.0 && m2 > 0.0) {
        return Err(Error::Estimation("vanishing oscillation".into()));
    }
    Ok((m1 / m2).ln() / (r1 / r2).ln())
}

fn assemble(estimates: Vec<Option<f64>>, depth: usize, j: i32, seed: u64) -> EmpiricalSpectrum {
    let mut counts = [0usize; N_BINS];
    let (mut underflow, mut overflow, mut failures) = (0, 0, 0);
    for &e in &estimates {
        let Some(h) = e.filter(|h| !h.is_nan()) else {
            failures += 1;
            continue;
        };
        if h < 0.0 {
            underflow += 1;
        } else if let Some(i) = bin_index(h) {
            counts[i] += 1;
        } else {
            overflow += 1;
        }
    }
    let scale = j as f64 * std::f64::consts::LN_2;
    let bins = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| Bin {
            h_center: (i as f64 + 0.5) * BIN_WIDTH,
            count,
            coarse_dim: (count > 0).then(|| ((count as f64).ln() / scale).clamp(0.0, 1.0)),
        })
        .collect();
    EmpiricalSpectrum {
        bins,
        n_samples: estimates.len(),
        depth,
        scale_j: j,
        seed,
        underflow,
        overflow,
        failures,
        estimates,
    }
}

/// Draws `n` Gauss-distributed numbers with prefixes of `depth` quotients,
/// estimates each exponent by [`two_scale_slope`] and bins the results.
pub fn empirical_spectrum(n: usize, depth: usize, j: i32, seed: u64) -> Result<EmpiricalSpectrum> {
    empirical_spectrum_in(n, depth, j, seed, |_| true)
}

/// As [`empirical_spectrum`], keeping only draws accepted by `keep`.
fn empirical_spectrum_in<F>(n: usize, depth: usize, j: i32, seed: u64, keep: F) -> Result<EmpiricalSpectrum>
where
    F: Fn(&CFNumber) -> bool,
{
    check_args(n, j)?;
    if depth == 0 {
        return Err(Error::domain("depth must be positive"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut estimates = Vec::with_capacity(n);
    let mut draws = 0usize;
    while estimates.len() < n {
        draws += 1;
        if draws > 1000 * n {
            return Err(Error::Estimation("rejection sampling did not fill the region".into()));
        }
        let x = CFNumber::random(rng.random::<u64>(), depth);
        if !keep(&x) {
            continue;
        }
        estimates.push(two_scale_slope(&x, j).ok());
    }
    Ok(assemble(estimates, depth, j, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneityCheck {
    /// Samples conditioned to `(0, 1/4)`.
    pub low: EmpiricalSpectrum,
    /// Samples conditioned to `(1/4, 1/2)`.
    pub high: EmpiricalSpectrum,
    /// `max |count_low − count_high| / n` over bins.
    pub max_deviation: f64,
    pub holds: bool,
}

/// Compares spectra of samples drawn in `(0, 1/4)` and `(1/4, 1/2)`; they
/// agree when every bin differs by at most `0.1·n`.
pub fn homogeneity_check(n: usize, depth: usize, j: i32, seed: u64) -> Result<HomogeneityCheck> {
    // x < 1/4 iff a₁ ≥ 4, and 1/4 < x < 1/2 iff a₁ ∈ {2, 3}
    let a1 = |x: &CFNumber| x.quotient(1).ok().flatten().and_then(num_traits::ToPrimitive::to_u64);
    let low = empirical_spectrum_in(n, depth, j, seed, |x| a1(x).is_some_and(|a| a >= 4))?;
    let high = empirical_spectrum_in(n, depth, j, seed ^ 0x9e37_79b9_7f4a_7c15, |x| {
        a1(x).is_some_and(|a| a == 2 || a == 3)
    })?;
    let max_deviation = low
        .bins
        .iter()
        .zip(&high.bins)
        .map(|(a, b)| a.count.abs_diff(b.count) as f64 / n as f64)
        .fold(0.0, f64::max);
    Ok(HomogeneityCheck {
        holds: max_deviation <= 0.1,
        low,
        high,
        max_deviation,
    })
}
