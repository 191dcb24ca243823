mod common;

use common::oracle::{path_vs_oracle, structure_check};

#[test]
fn gram_and_products_match_dense_design() {
    structure_check(60, 11).unwrap();
}

#[test]
fn path_matches_oracle_on_small_instances() {
    for seed in 0..3 {
        let r = path_vs_oracle(6, 20, seed).unwrap();
        assert!(r.breakpoints >= 2);
    }
}

#[test]
fn twelve_by_twelve_path_matches_oracle() {
    let r = path_vs_oracle(12, 12, 42).unwrap();
    assert!(r.max_coeff_error <= 1e-6);
}
