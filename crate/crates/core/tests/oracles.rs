mod support;

use support::brute::{cox_discrepancy, km_duplication_discrepancy, logistic_discrepancy, multinomial_discrepancy};

#[test]
fn logistic_matches_direct_maximization() {
    for seed in 0..5 {
        let d = logistic_discrepancy(seed);
        assert!(d.estimate < 1e-3 && d.se_rel < 1e-3, "seed {seed}: {d:?}");
    }
}

#[test]
fn multinomial_matches_direct_maximization() {
    for seed in 10..14 {
        let d = multinomial_discrepancy(seed);
        assert!(d.estimate < 1e-3 && d.se_rel < 1e-3, "seed {seed}: {d:?}");
    }
}

#[test]
fn cox_matches_breslow_likelihood_with_ties() {
    for seed in 20..26 {
        let d = cox_discrepancy(seed);
        assert!(d.estimate < 1e-6 && d.se_rel < 1e-4, "seed {seed}: {d:?}");
    }
}

#[test]
fn km_with_integer_weights_equals_duplicated_rows() {
    for seed in 30..35 {
        let d = km_duplication_discrepancy(seed);
        assert!(d < 1e-14, "seed {seed}: {d}");
    }
}
