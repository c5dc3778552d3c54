//! Engine-vs-oracle equivalence on the built-in tiny explicit parameter
//! sets. The full-size battery (100 sets, exhaustive shifts) runs in the
//! acceptance suite; this is a faster smoke of the same machinery.

use sidonlab_core::oracle::{builtin_tiny_parameter_sets, equivalence_battery, EquivalenceOptions};

#[test]
fn battery_passes_on_first_parameter_set() {
    let (_, params) = &builtin_tiny_parameter_sets()[0];
    let report = equivalence_battery(
        params,
        &EquivalenceOptions {
            random_sets: 24,
            ..EquivalenceOptions::default()
        },
    )
    .unwrap();
    assert!(report.passed(), "mismatches: {:#?}", report.mismatches);
    assert_eq!(report.floor_count, 801);
    assert!(report.shift_comparisons > 1_000);
    assert!(report.expr_comparisons >= 48);
    assert!(report.witness_comparisons > 100);
    assert!(report.refusal_checks > 0);
}

#[test]
fn battery_passes_on_second_parameter_set() {
    let (_, params) = &builtin_tiny_parameter_sets()[1];
    let report = equivalence_battery(
        params,
        &EquivalenceOptions {
            random_sets: 24,
            ..EquivalenceOptions::default()
        },
    )
    .unwrap();
    assert!(report.passed(), "mismatches: {:#?}", report.mismatches);
    assert_eq!(report.floor_count, 1904);
    assert!(report.witness_comparisons > 200);
}

#[test]
fn battery_seed_changes_the_sample_but_not_the_verdict() {
    let (_, params) = &builtin_tiny_parameter_sets()[0];
    for seed in [1u64, 2, 3] {
        let report = equivalence_battery(
            params,
            &EquivalenceOptions {
                random_sets: 8,
                seed,
                ..EquivalenceOptions::default()
            },
        )
        .unwrap();
        assert!(report.passed(), "seed {seed}: {:#?}", report.mismatches);
    }
}
