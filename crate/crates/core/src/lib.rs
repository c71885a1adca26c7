//! Certified evaluation of the Brjuno function and numerical study of its
//! pointwise regularity.
//!
//! The crate is layered bottom-up:
//!
//! - [`cf`]: exact continued fractions, convergents, Gauss orbits, cylinders.
//! - [`brjuno`]: the series `B(x)` with certified tails and `B̃` at rationals.
//! - [`quadrature`]: integrals of `B` across its dense logarithmic singularities.
//! - [`regularity`]: p-exponents, moduli of continuity, primitive Hölder exponents.
//! - [`spectrum`]: analytic and empirical multifractal spectra.
//! - [`cli`]: the `brjuno` command-line front end.

pub mod acceptance;
pub mod brjuno;
pub mod cf;
pub mod cli;
pub mod error;
pub mod num;
pub mod quadrature;
pub mod regularity;
pub mod spectrum;
pub mod xspec;

pub use error::{Error, Result};
