//! The acceptance gate: one test per numbered criterion, each printing its
//! exact verdict line. Run with `--nocapture` (or via `kantlab check`) to
//! see the computed values.

use kantlab_core::acceptance::run_criterion;

fn run(id: usize) {
    let result = run_criterion(id);
    println!("{}", result.line());
    assert!(result.pass, "{}", result.line());
}

#[test]
fn criterion_01_strong_duality() {
    run(1);
}

#[test]
fn criterion_02_cyclical_iff_strong() {
    run(2);
}

#[test]
fn criterion_03_perturbation_map() {
    run(3);
}

#[test]
fn criterion_04_level1_reproductions() {
    run(4);
}

#[test]
fn criterion_05_level2_construction() {
    run(5);
}

#[test]
fn criterion_06_singular_mass_trend() {
    run(6);
}

#[test]
fn criterion_07_example_transport_values() {
    run(7);
}

#[test]
fn criterion_08_buildup_profile() {
    run(8);
}

#[test]
fn criterion_09_family_identities() {
    run(9);
}

#[test]
fn criterion_10_relaxation_probe() {
    run(10);
}

#[test]
fn criterion_11_tower_validation() {
    run(11);
}
