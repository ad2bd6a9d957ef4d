//! Acceptance criteria, one test each. Every test prints a PASS/FAIL line
//! (visible with `--nocapture`) and fails if its criterion does.

use robinhom_core::validate::{run_criterion, ValidateOptions};

fn check(id: u8) {
    let outcome = run_criterion(id, &ValidateOptions::default()).unwrap();
    println!("{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn criterion_01_ball_closed_form_chain() {
    check(1);
}

#[test]
fn criterion_02_exterior_numeric_oracle() {
    check(2);
}

#[test]
fn criterion_03_strange_term_limits() {
    check(3);
}

#[test]
fn criterion_04_cell_problem_identities() {
    check(4);
}

#[test]
fn criterion_05_monotonicity_in_kappa() {
    check(5);
}

#[test]
fn criterion_06_dirichlet_bound() {
    check(6);
}

#[test]
fn criterion_07_capacity_trend() {
    check(7);
}

#[test]
fn criterion_08_critical_scaling_limits() {
    check(8);
}

#[test]
fn criterion_09_homogenization_convergence() {
    check(9);
}

#[test]
fn criterion_10_regime_classification() {
    check(10);
}

#[test]
fn criterion_11_kernel_oracles() {
    check(11);
}

#[test]
fn injected_sign_fault_is_caught() {
    let outcome = run_criterion(5, &ValidateOptions { inject_sign_fault: true }).unwrap();
    println!("{}", outcome.line());
    assert!(!outcome.passed);
}
