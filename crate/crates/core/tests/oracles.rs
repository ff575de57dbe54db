mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fsq::envs::LatticeMdp;
use fsq::harness::{run_oracle_check, Algo};
use fsq::oracle::{max_deviation, tabular_q_learning, value_iteration, TabularConfig};

#[test]
fn tabular_q_learning_reaches_lattice_oracle() {
    let env = LatticeMdp::new(3, 1.0, 20).unwrap();
    let mdp = env.direct_mdp(&[-1.0, 0.0, 1.0], 0.9).unwrap();
    let q_star = value_iteration(&mdp, 1e-10).unwrap().q;
    let config = TabularConfig {
        episodes: 10_000,
        ..TabularConfig::default()
    };
    let q = tabular_q_learning(&mdp, &config, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let dev = max_deviation(&q, &q_star);
    assert!(dev <= 0.05, "deviation {dev}");
}

#[test]
fn tabular_q_learning_on_fsq_lattice_is_exact_on_reachable_states() {
    let env = LatticeMdp::new(3, 1.0, 20).unwrap();
    let mdp = env.fsq_mdp(0.9, true).unwrap();
    let q_star = value_iteration(&mdp, 1e-10).unwrap().q;
    let q = tabular_q_learning(&mdp, &TabularConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(max_deviation(&q, &q_star) <= 0.05);
}

#[test]
fn dqn_on_two_state_chain_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = common::lattice_config(Algo::Dqn, 2, dir.path());
    cfg.lattice_states = 2;
    cfg.dqn_levels = 2;
    // Absolute 0.05 on a reward span of 2.
    cfg.oracle_tolerance = 0.025;
    let report = run_oracle_check(&cfg).unwrap();
    assert!(report.passed, "deviation {}", report.max_deviation);
    assert_eq!(report.oracle_q.len(), 2);
    assert!(dir.path().join("oracle_q.csv").exists());
}

#[test]
fn fsq_oracle_check_passes_on_another_seed() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_oracle_check(&common::lattice_config(Algo::Fsq, 4, dir.path())).unwrap();
    assert!(report.passed, "deviation {}", report.max_deviation);
    assert!(report.episodes_trained <= 10_000);
}
