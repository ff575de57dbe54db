//! One line per headline criterion. Exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;

use common::Check;
use fsq::harness::Algo;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temp dir");
    let root = dir.path();

    let criteria: Vec<Criterion> = vec![
        (
            "oracle equivalence (fsq, lattice 3x1.0, gamma 0.9, <= 1e4 episodes, < 60 s)",
            Box::new(|| common::oracle_equivalence(Algo::Fsq, 0, &root.join("oracle-fsq"))),
        ),
        (
            "point_reacher learning (median of 5 seeds <= 500 episodes, < 5 min)",
            Box::new(|| common::point_reacher_learning(&root.join("point_reacher"))),
        ),
        ("complexity (3m heads vs k^m actions)", Box::new(common::complexity)),
        (
            "gradient correctness (h 1e-5, rel err <= 1e-4, m in {1,2,4})",
            Box::new(common::gradient_correctness),
        ),
        (
            "argmax shift invariance (1e4 outputs, exact)",
            Box::new(|| common::shift_invariance(10_000)),
        ),
        ("replay statistics (PER 3:1 and alpha 0 uniformity)", Box::new(common::replay_statistics)),
        (
            "determinism (byte-identical curve.csv on every env)",
            Box::new(|| common::determinism(&root.join("determinism"))),
        ),
        ("target sync (C = 1000)", Box::new(|| common::target_sync(5000, 1000))),
        (
            "dqn baseline (cartesian m=1 k=3 on lattice, same tolerance)",
            Box::new(|| {
                let mut check = common::oracle_equivalence(Algo::Dqn, 0, &root.join("oracle-dqn"));
                check.passed &= common::dqn_action_set_is_three_levels();
                check
            }),
        ),
    ];

    let mut failed = 0;
    for (name, run) in &criteria {
        let check = run();
        if !check.passed {
            failed += 1;
        }
        println!("[{}] {name}: {}", if check.passed { "PASS" } else { "FAIL" }, check.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
