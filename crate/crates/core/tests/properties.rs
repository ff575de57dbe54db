mod common;

use proptest::prelude::*;

use fsq::fsq::greedy_directions;

#[test]
fn gradients_match_finite_differences() {
    for m in [1, 2, 4] {
        let err = common::gradient_check(m, 10, m as u64);
        assert!(err <= 1e-4, "m={m}: relative error {err:e}");
    }
}

#[test]
fn target_network_syncs_every_interval() {
    let check = common::target_sync(1000, 250);
    assert!(check.passed, "{}", check.detail);
}

#[test]
fn per_matches_priority_ratio() {
    let (p0, p1) = common::per_frequencies(20_000);
    assert!((p0 - 0.75).abs() < 0.02 && (p1 - 0.25).abs() < 0.02, "{p0} {p1}");
    assert!(common::per_uniform_p_value(20_000) > 0.01);
}

#[test]
fn every_env_constructs() {
    assert_eq!(common::make_all_envs(), 3);
}

proptest! {
    #[test]
    fn argmax_ignores_constant_shift(q in prop::collection::vec(-1e3f64..1e3, 3..=24)) {
        let n = q.len() / 3 * 3;
        let q = &q[..n];
        prop_assert_eq!(greedy_directions(q), common::greedy_directions_offset(q));
    }

    #[test]
    fn argmax_ties_go_to_lowest_head(v in -10.0f64..10.0, m in 1usize..5) {
        let d = greedy_directions(&vec![v; 3 * m]);
        prop_assert!(d.as_slice().iter().all(|&x| x == -1));
    }
}
