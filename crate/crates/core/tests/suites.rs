//! Runs every self-check suite at its default sample counts, the same way
//! `bellrand verify` does.

use bellrand::checks::{all_pass, run_suite, Suite};

fn assert_suite(suite: Suite) {
    let rows = run_suite(suite, 0, 1);
    for r in &rows {
        println!(
            "[{}] {:<28} margin {:>13.6e} pass {}",
            r.suite, r.property, r.worst_margin, r.pass
        );
    }
    assert!(all_pass(&rows), "suite failed: {rows:#?}");
}

#[test]
fn lemmas_suite_passes() {
    assert_suite(Suite::Lemmas);
}

#[test]
fn profiles_suite_passes() {
    assert_suite(Suite::Profiles);
}

#[test]
fn solver_suite_passes() {
    assert_suite(Suite::Solver);
}

#[test]
fn lhvm_suite_passes() {
    assert_suite(Suite::Lhvm);
}

#[test]
fn all_suite_is_the_concatenation() {
    let all = run_suite(Suite::All, 40, 3);
    let mut sum = 0;
    for s in [Suite::Lemmas, Suite::Profiles, Suite::Solver, Suite::Lhvm] {
        sum += run_suite(s, 40, 3).len();
    }
    assert_eq!(all.len(), sum);
}

#[test]
fn different_seeds_change_sampled_margins() {
    let a = run_suite(Suite::Lemmas, 200, 1);
    let b = run_suite(Suite::Lemmas, 200, 2);
    let l3 = |rows: &[bellrand::checks::PropertyReport]| {
        rows.iter()
            .find(|r| r.property == "Lemma l3")
            .expect("row exists")
            .worst_margin
    };
    assert_ne!(l3(&a), l3(&b));
}
