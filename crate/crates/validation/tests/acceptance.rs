//! One test per acceptance criterion. Each prints its PASS/FAIL line with the
//! measured values; tolerances follow `BRJUNO_SELFTEST_TOL_SCALE` (default 1).

use std::sync::Mutex;

use brjuno_core::acceptance::{run_criterion, Tolerances};

// Criteria carry wall-clock budgets, so they never share the CPU.
static SERIAL: Mutex<()> = Mutex::new(());

fn check(id: usize) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let tol = Tolerances::from_env().expect("valid tolerance scale");
    let report = run_criterion(id, tol);
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn c01_rational_values() {
    check(1);
}

#[test]
fn c02_fixed_point_values() {
    check(2);
}

#[test]
fn c03_functional_equation_residual() {
    check(3);
}

#[test]
fn c04_cf_invariants_depth_40() {
    check(4);
}

#[test]
fn c05_p1_exponents() {
    check(5);
}

#[test]
fn c06_p_independence() {
    check(6);
}

#[test]
fn c07_haar_wavelet_law() {
    check(7);
}

#[test]
fn c08_local_average_at_half() {
    check(8);
}

#[test]
fn c09_modulus_badly_approximable() {
    check(9);
}

#[test]
fn c10_primitive_holder() {
    check(10);
}

#[test]
fn c11_local_dimension() {
    check(11);
}

#[test]
fn c12_spectrum() {
    check(12);
}
