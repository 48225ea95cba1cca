//! Acceptance gate: one test per release criterion, each printing a single
//! PASS/FAIL line with its check count and timing (visible under
//! `--nocapture`, and on failure). Criteria 1 to 3 share one solver corpus
//! that is computed once; a global gate serializes the suites so each
//! criterion's reported wall time covers only its own work.

use std::sync::{Mutex, MutexGuard, OnceLock};

use tship_cli::battery::{self, CriterionOutcome};

static GATE: Mutex<()> = Mutex::new(());
static DUALITY: OnceLock<Vec<CriterionOutcome>> = OnceLock::new();

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn duality(id: usize) -> &'static CriterionOutcome {
    let all = DUALITY.get_or_init(battery::duality_batteries);
    all.iter().find(|c| c.id == id).expect("criterion is part of the shared corpus")
}

fn assert_criterion(c: &CriterionOutcome) {
    println!(
        "criterion {:>2} {:<20} {} ({} checks, {:.1}s) {}",
        c.id,
        c.name,
        if c.passed { "PASS" } else { "FAIL" },
        c.checks,
        c.seconds,
        c.summary
    );
    for failure in &c.failures {
        println!("    failure: {failure}");
    }
    if c.failed > c.failures.len() {
        println!("    ({} more failures)", c.failed - c.failures.len());
    }
    assert!(c.passed, "criterion {} {} failed {} of {} checks", c.id, c.name, c.failed, c.checks);
}

#[test]
fn criterion_01_duality_gap() {
    let _gate = gate();
    assert_criterion(duality(1));
}

#[test]
fn criterion_02_step_decrement() {
    let _gate = gate();
    assert_criterion(duality(2));
}

#[test]
fn criterion_03_iteration_bound() {
    let _gate = gate();
    assert_criterion(duality(3));
}

#[test]
fn criterion_04_sssp_accuracy() {
    let _gate = gate();
    assert_criterion(&battery::sssp_battery());
}

#[test]
fn criterion_05_gradient_consistency() {
    let _gate = gate();
    assert_criterion(&battery::gradient_battery());
}

#[test]
fn criterion_06_softmax_identities() {
    let _gate = gate();
    assert_criterion(&battery::softmax_battery());
}

#[test]
fn criterion_07_oracle_agreement() {
    let _gate = gate();
    assert_criterion(&battery::oracle_battery());
}

#[test]
fn criterion_08_spanner_guarantees() {
    let _gate = gate();
    assert_criterion(&battery::spanner_battery());
}

#[test]
fn criterion_09_model_accounting() {
    let _gate = gate();
    assert_criterion(&battery::models_battery());
}

#[test]
fn criterion_10_tree_sampling() {
    let _gate = gate();
    assert_criterion(&battery::tree_battery());
}

#[test]
fn criterion_11_warm_start() {
    let _gate = gate();
    assert_criterion(&battery::warm_start_battery());
}
