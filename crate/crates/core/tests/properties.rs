mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn reduction_keeps_spectral_values(input in poly_with_spectra()) {
        reduce_preserves_evaluation(input)?;
    }

    #[test]
    fn normalized_squares_are_zero_or_at_least_one(input in (real_poly(3, 2), context_family())) {
        normalized_square_bounds(input)?;
    }

    #[test]
    fn coloring_witnesses_reverify(keep in nonempty_subset(18)) {
        ray_witnesses_reverify(keep)?;
    }

    #[test]
    fn general_search_witnesses_reverify(keep in nonempty_subset(6)) {
        general_witnesses_reverify(keep)?;
    }

    #[test]
    fn parity_max_is_zero_iff_satisfiable(keep in nonempty_subset(6)) {
        max_zero_iff_satisfiable_parity(keep)?;
    }

    #[test]
    fn basis_max_is_zero_iff_satisfiable(keep in nonempty_subset(9)) {
        max_zero_iff_satisfiable_bases(keep)?;
    }
}

#[test]
fn engines_agree_on_the_catalog() {
    let lines = cross_method_agreement().unwrap();
    assert_eq!(lines.len(), ksineq::catalog::entries().len());
}
