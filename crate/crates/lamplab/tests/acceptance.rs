//! The release gate: every check in the acceptance suite must pass.
//!
//! Each test prints the suite's one-line verdict (visible with
//! `cargo test --test acceptance -- --nocapture`) and fails if the check
//! failed.  The CLI exposes the same suite behind `--check`.

use lamplab::acceptance;

fn gate(check: fn() -> acceptance::CriterionOutcome) {
    let outcome = check();
    println!("{}", outcome.line());
    assert!(outcome.passed, "{}", outcome.line());
}

#[test]
fn check_01_oracle_agreement() {
    gate(acceptance::oracle_agreement);
}

#[test]
fn check_02_closed_form_fixtures() {
    gate(acceptance::closed_form_fixtures);
}

#[test]
fn check_03_cover_bracketing() {
    gate(acceptance::cover_bracketing);
}

#[test]
fn check_04_late_set_exponents() {
    gate(acceptance::late_set_exponents);
}

#[test]
fn check_05_distinguisher_power() {
    gate(acceptance::distinguisher_power);
}

#[test]
fn check_06_late_pair_correlation() {
    gate(acceptance::late_pair_correlation);
}

#[test]
fn check_07_excursion_identities() {
    gate(acceptance::excursion_identities);
}

#[test]
fn check_08_partition_cover_bound() {
    gate(acceptance::partition_cover_bound);
}

#[test]
fn check_09_lamplighter_exactness() {
    gate(acceptance::lamplighter_exactness);
}

#[test]
fn check_10_lamp_cutoff_probe() {
    gate(acceptance::lamp_cutoff_probe);
}

#[test]
fn check_11_record_replay() {
    gate(acceptance::record_replay);
}
