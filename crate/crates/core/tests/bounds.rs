mod common;

use common::{f_ex, set_of_mask};
use std::collections::BTreeSet;
use twopt_core::corpus::forests_up_to;
use twopt_core::factorization::{complement_bounds_check, removal_bound_check};

#[test]
fn complement_bounds_hold_on_all_small_forests() {
    for forest in forests_up_to(7) {
        for mask in 0u32..(1 << forest.node_count()) {
            let u = set_of_mask(mask);
            let report = complement_bounds_check(&forest, &u);
            assert!(report.bounds_hold, "forest {:?}, U {u:?}: {report:?}", forest.parents());
        }
    }
}

#[test]
fn removal_bound_holds_for_every_subset_pair() {
    for forest in forests_up_to(6) {
        let n = forest.node_count();
        for mask in 0u32..(1 << n) {
            let u = set_of_mask(mask);
            let mut sub = mask;
            loop {
                let report = removal_bound_check(&forest, &u, &set_of_mask(sub)).unwrap();
                assert!(report.holds, "forest {:?}: {report:?}", forest.parents());
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
        }
    }
}

#[test]
fn complement_bounds_on_the_running_example() {
    let f = f_ex();
    let report = complement_bounds_check(&f, &BTreeSet::from([1, 3, 4, 5]));
    assert_eq!(report.complement_size, 1);
    assert_eq!(report.complement_factor_count, 1);
    assert_eq!(report.forest_factor_count, 1);
    assert_eq!(report.context_factor_count, 1);
    assert!(report.bounds_hold);

    let empty = complement_bounds_check(&f, &BTreeSet::from([1, 2, 3, 4, 5]));
    assert_eq!(empty.context_factor_count, 0);
    assert!(empty.bounds_hold);
}

#[test]
fn removal_requires_a_subset() {
    let f = f_ex();
    assert!(removal_bound_check(&f, &BTreeSet::from([1]), &BTreeSet::from([2])).is_err());
    let report = removal_bound_check(&f, &BTreeSet::from([1, 2, 3, 4, 5]), &BTreeSet::from([1, 3, 4, 5])).unwrap();
    assert_eq!(report.fact_u, 1);
    assert_eq!(report.fact_u_prime, 2);
    assert_eq!(report.bound, 12);
}
