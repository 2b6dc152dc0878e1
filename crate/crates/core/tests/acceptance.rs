//! Acceptance suite: every named check at its default size and tolerance.
//!
//! Each test prints one summary line, then a line per report, and fails if
//! any report fails. The lines go straight to stdout so that they show even
//! when the harness captures output.

use std::io::Write;

use bethe_core::verification::{run_check, CheckName, SuiteOptions};

fn accept(index: usize, check: CheckName) {
    let reports = run_check(check, &SuiteOptions::default());
    assert!(!reports.is_empty(), "{check} produced no reports");
    let pass = reports.iter().all(|r| r.pass);
    let worst = reports
        .iter()
        .map(|r| r.residual / r.tolerance)
        .fold(0.0, f64::max);
    let mut lines = vec![format!(
        "[{index:>2}] {} {check}: {} (worst residual/tolerance {worst:.2e})",
        if pass { "PASS" } else { "FAIL" },
        check.claim(),
    )];
    lines.extend(reports.iter().map(|r| format!("       {r}")));
    let mut out = std::io::stdout().lock();
    writeln!(out, "\n{}", lines.join("\n")).unwrap();
    out.flush().unwrap();
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.to_string())
        .collect();
    assert!(failed.is_empty(), "{check} failed:\n{}", failed.join("\n"));
}

#[test]
fn c01_oracle_agreement() {
    accept(1, CheckName::Oracle);
}

#[test]
fn c02_delta_initial_condition() {
    accept(2, CheckName::Delta);
}

#[test]
fn c03_single_particle_walk() {
    accept(3, CheckName::Walk);
}

#[test]
fn c04_normalization() {
    accept(4, CheckName::Normalization);
}

#[test]
fn c05_boundary_conditions() {
    accept(5, CheckName::Boundary);
}

#[test]
fn c06_forward_equation() {
    accept(6, CheckName::Forward);
}

#[test]
fn c07_permutation_lemmas() {
    accept(7, CheckName::Lemmas);
}

#[test]
fn c08_inversion_monomial() {
    accept(8, CheckName::Monomial);
}

#[test]
fn c09_azrp_asep_bijection() {
    accept(9, CheckName::Bijection);
}

#[test]
fn c10_azrp_marginal() {
    accept(10, CheckName::Marginal);
}

#[test]
fn c11_asap_substitution() {
    accept(11, CheckName::Substitution);
}

#[test]
fn c12_monte_carlo() {
    accept(12, CheckName::MonteCarlo);
}

#[test]
fn c13_performance() {
    accept(13, CheckName::Performance);
}
