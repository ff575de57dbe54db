#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsq::approximator::QNetwork;
use fsq::dqn::{cartesian_count, cartesian_discretize, DEFAULT_ACTION_CAP};
use fsq::encoding::{Encoding, FeatureMap};
use fsq::envs::{make_env, ENV_NAMES};
use fsq::fsq::greedy_directions;
use fsq::harness::{bench_discretization, run_oracle_check, run_train, Algo, RunConfig};
use fsq::replay::Replay;
use fsq::{ActionSpaceSpec, AgentConfig, AuxiliaryState, DirectionVector, FsqAgent, Transition};

/// Outcome of one acceptance criterion.
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

pub fn lattice_config(algo: Algo, seed: u64, out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        env_name: "lattice_mdp".into(),
        algo,
        episodes: 10_000,
        seed,
        out_dir: out.to_path_buf(),
        delta_a: 1.0,
        encoding: Encoding::OneHot,
        lattice_states: 3,
        ..RunConfig::default()
    };
    cfg.agent.gamma = 0.9;
    cfg
}

pub fn oracle_equivalence(algo: Algo, seed: u64, out: &Path) -> Check {
    let start = std::time::Instant::now();
    let report = run_oracle_check(&lattice_config(algo, seed, out)).expect("oracle check runs");
    let secs = start.elapsed().as_secs_f64();
    let within_budget = report.episodes_trained <= 10_000;
    let fast = secs < 60.0;
    Check::new(
        report.passed && within_budget && fast,
        format!(
            "max |Q - Q*| = {:.4} (tol {:.4}) after {} episodes in {:.1}s",
            report.max_deviation, report.tolerance, report.episodes_trained, secs
        ),
    )
}

/// Episodes needed to reach the success threshold, per seed.
pub fn point_reacher_solve_episodes(seeds: &[u64], budget: usize, out: &Path) -> Vec<Option<usize>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let dir = out.join(format!("seed{seed}"));
                scope.spawn(move || {
                    let cfg = RunConfig {
                        env_name: "point_reacher".into(),
                        episodes: budget,
                        seed,
                        out_dir: dir,
                        ..RunConfig::default()
                    };
                    run_train(&cfg).expect("training runs").solved_at.map(|i| i + 1)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    })
}

pub fn point_reacher_learning(out: &Path) -> Check {
    let start = std::time::Instant::now();
    let solved = point_reacher_solve_episodes(&[0, 1, 2, 3, 4], 500, out);
    let secs = start.elapsed().as_secs_f64();
    let mut sorted: Vec<usize> = solved.iter().map(|s| s.unwrap_or(usize::MAX)).collect();
    sorted.sort_unstable();
    let median = sorted[2];
    let shown: Vec<String> = solved
        .iter()
        .map(|s| s.map_or_else(|| "-".to_string(), |e| e.to_string()))
        .collect();
    Check::new(
        median <= 500 && secs < 300.0,
        format!("episodes to threshold per seed [{}], {:.1}s", shown.join(", "), secs),
    )
}

pub fn complexity() -> Check {
    let rows = bench_discretization(&[1, 2, 10], 3);
    let table_ok = [(3, 3), (6, 9), (30, 59049)]
        .iter()
        .zip(&rows)
        .all(|(&(h, c), r)| r.fsq_heads == h && r.cartesian_actions == Some(c));
    let heads_ok = (1..=8).all(|m| {
        let spec = ActionSpaceSpec::uniform(m, -1.0, 1.0, 0.75).unwrap();
        let features = FeatureMap::Identity {
            state_dim: 4,
            action_dims: m,
        };
        let agent = FsqAgent::new(spec, features, AgentConfig::default(), &mut ChaCha8Rng::seed_from_u64(m as u64))
            .unwrap();
        agent.online().output_dim() == 3 * m && cartesian_count(m, 3) == Some(3u128.pow(m as u32))
    });
    Check::new(
        table_ok && heads_ok,
        format!(
            "(m=2,k=3) -> ({}, {:?}), (m=10,k=3) -> ({}, {:?}); fsq output layer 3m for m=1..8: {heads_ok}",
            rows[1].fsq_heads, rows[1].cartesian_actions, rows[2].fsq_heads, rows[2].cartesian_actions
        ),
    )
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Worst per-tensor relative error between analytic and central-difference
/// gradients of the masked loss, over `points` random parameter draws.
pub fn gradient_check(m: usize, points: usize, seed: u64) -> f64 {
    const H: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let input_dim = 2 + m;
        let net = QNetwork::new(input_dim, 16, 3 * m, &mut rng);
        let batch = 4;
        let inputs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..3 * m).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        // One target per partition, like the FSQ update.
        let mask: Vec<Vec<bool>> = (0..batch)
            .map(|_| {
                let mut row = vec![false; 3 * m];
                for j in 0..m {
                    row[3 * j + rng.gen_range(0..3)] = true;
                }
                row
            })
            .collect();
        let weights: Vec<f64> = (0..batch).map(|_| rng.gen_range(0.1..1.0)).collect();
        let (_, grads, _) = net.loss_and_gradients(&inputs, &targets, &mask, Some(&weights)).unwrap();
        let loss_at = |n: &QNetwork| n.loss_and_gradients(&inputs, &targets, &mask, Some(&weights)).unwrap().0;

        for (t, analytic) in grads.tensors().iter().enumerate() {
            let mut numeric = vec![0.0; analytic.len()];
            for (i, g) in numeric.iter_mut().enumerate() {
                let mut plus = net.clone();
                plus.tensors_mut()[t][i] += H;
                let mut minus = net.clone();
                minus.tensors_mut()[t][i] -= H;
                *g = (loss_at(&plus) - loss_at(&minus)) / (2.0 * H);
            }
            worst = worst.max(rel_error(analytic, &numeric));
        }
    }
    worst
}

pub fn gradient_correctness() -> Check {
    let errors: Vec<f64> = [1, 2, 4].iter().map(|&m| gradient_check(m, 10, 100 + m as u64)).collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    Check::new(
        worst <= 1e-4,
        format!(
            "worst relative error m=1: {:.2e}, m=2: {:.2e}, m=4: {:.2e} (tol 1e-4)",
            errors[0], errors[1], errors[2]
        ),
    )
}

/// Greedy directions computed on `Q - 1`, the offset form.
pub fn greedy_directions_offset(outputs: &[f64]) -> DirectionVector {
    let shifted: Vec<f64> = outputs.iter().map(|q| q - 1.0).collect();
    greedy_directions(&shifted)
}

pub fn shift_invariance(samples: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < samples {
        let m = rng.gen_range(1..=4);
        let spec = ActionSpaceSpec::uniform(m, -1.0, 1.0, 0.75).unwrap();
        let features = FeatureMap::Identity {
            state_dim: 3,
            action_dims: m,
        };
        let config = AgentConfig {
            hidden_units: 32,
            ..AgentConfig::default()
        };
        let agent = FsqAgent::new(spec, features, config, &mut rng).unwrap();
        for _ in 0..100 {
            let v = AuxiliaryState::new(
                (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            let selected = agent.select_directions_with(&v, 0.0, &mut rng).unwrap();
            let offset = greedy_directions_offset(&agent.q_values(&v).unwrap());
            if selected != offset {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    Check::new(
        mismatches == 0,
        format!("{mismatches} disagreements over {checked} network outputs"),
    )
}

pub fn per_frequencies(draws: usize) -> (f64, f64) {
    let mut replay = Replay::prioritized(2, 1.0, 1e-3, true);
    replay.push(0u8);
    replay.push(1u8);
    let indices: Vec<_> = (0..2).map(|s| replay.buffer().get(s).unwrap().0).collect();
    replay.update_priorities(&indices, &[3.0 - 1e-3, 1.0 - 1e-3]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = [0usize; 2];
    for _ in 0..draws {
        let batch = replay.sample(1, 0.4, &mut rng).unwrap();
        counts[batch[0].transition as usize] += 1;
    }
    (counts[0] as f64 / draws as f64, counts[1] as f64 / draws as f64)
}

/// Chi-square p-value of draws from an `alpha = 0` tree with uneven priorities.
pub fn per_uniform_p_value(draws: usize) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let bins = 100;
    let mut replay = Replay::prioritized(bins, 0.0, 1e-3, true);
    for i in 0..bins {
        replay.push(i);
    }
    let indices: Vec<_> = (0..bins).map(|s| replay.buffer().get(s).unwrap().0).collect();
    let tds: Vec<f64> = (0..bins).map(|i| (i * i) as f64).collect();
    replay.update_priorities(&indices, &tds);
    let tree = replay.priorities().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut counts = vec![0usize; bins];
    for _ in 0..draws {
        counts[tree.draw(&mut rng)] += 1;
    }
    let expected = draws as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

pub fn replay_statistics() -> Check {
    let (p0, p1) = per_frequencies(100_000);
    let p_value = per_uniform_p_value(100_000);
    let ok = (p0 - 0.75).abs() <= 0.02 && (p1 - 0.25).abs() <= 0.02 && p_value > 0.01;
    Check::new(
        ok,
        format!("alpha=1 frequencies {p0:.4}/{p1:.4} (want 0.75/0.25 +- 0.02); alpha=0 chi-square p = {p_value:.3}"),
    )
}

pub fn short_run_config(env: &str, seed: u64, out: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        env_name: env.into(),
        seed,
        out_dir: out.to_path_buf(),
        stop_on_success: false,
        ..RunConfig::default()
    };
    match env {
        "lattice_mdp" => {
            cfg.delta_a = 1.0;
            cfg.episodes = 150;
        }
        "mountain_car" => {
            cfg.episodes = 3;
            cfg.max_steps = Some(400);
        }
        _ => cfg.episodes = 40,
    }
    cfg.agent.memory_size = 2000;
    cfg.agent.target_update_interval = 100;
    cfg
}

pub fn determinism(out: &Path) -> Check {
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for name in ENV_NAMES {
        for algo in [Algo::Fsq, Algo::Dqn] {
            let mut curves = Vec::new();
            for run in 0..2 {
                let mut cfg = short_run_config(name, 5, &out.join(format!("{name}-{}-{run}", algo.as_str())));
                cfg.algo = algo;
                run_train(&cfg).expect("training runs");
                curves.push(std::fs::read(cfg.out_dir.join("curve.csv")).unwrap());
            }
            if curves[0] != curves[1] {
                failures.push(format!("{name}/{}", algo.as_str()));
            }
            sizes.push(curves[0].len());
        }
    }
    Check::new(
        failures.is_empty() && sizes.iter().all(|&s| s > 100),
        if failures.is_empty() {
            format!("curve.csv identical across reruns for {} (env, algo) pairs", sizes.len())
        } else {
            format!("differing curves: {}", failures.join(", "))
        },
    )
}

/// Drives an agent for `steps` updates on synthetic transitions, reporting
/// whether the target tracked the sync contract.
pub fn target_sync(steps: u64, interval: usize) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = ActionSpaceSpec::uniform(2, -1.0, 1.0, 0.75).unwrap();
    let features = FeatureMap::Identity {
        state_dim: 2,
        action_dims: 2,
    };
    let config = AgentConfig {
        hidden_units: 8,
        batch_size: 4,
        memory_size: 256,
        learning_rate: 1e-3,
        target_update_interval: interval,
        ..AgentConfig::default()
    };
    let mut agent = FsqAgent::new(spec, features, config, &mut rng).unwrap();
    let mut replay_rng = ChaCha8Rng::seed_from_u64(22);
    let mut previous_target = agent.target().clone();
    let mut syncs = 0;
    let mut violations = 0;
    let mut online_moved = 0;
    for _ in 0..steps {
        let phi = AuxiliaryState::new(vec![rng.gen(), rng.gen()], vec![0.0, 0.0]);
        let d = DirectionVector::new(vec![rng.gen_range(-1..=1), rng.gen_range(-1..=1)]).unwrap();
        let next = AuxiliaryState::new(vec![rng.gen(), rng.gen()], vec![0.0, 0.0]);
        let t = Transition::new(phi, d, rng.gen_range(-1.0..1.0), next, false).unwrap();
        agent.step_update(t, &mut replay_rng).unwrap();

        let step = agent.global_step();
        if step.is_multiple_of(interval as u64) {
            syncs += 1;
            if agent.target() != agent.online() {
                violations += 1;
            }
        } else {
            if *agent.target() != previous_target {
                violations += 1;
            }
            if agent.target() != agent.online() {
                online_moved += 1;
            }
        }
        previous_target = agent.target().clone();
    }
    Check::new(
        violations == 0 && syncs == steps / interval as u64 && online_moved > 0,
        format!("{syncs} syncs over {steps} steps, {violations} violations, online diverged from target on {online_moved} steps"),
    )
}

pub fn dqn_action_set_is_three_levels() -> bool {
    let spec = ActionSpaceSpec::uniform(1, -1.0, 1.0, 1.0).unwrap();
    let set = cartesian_discretize(&spec, 3, DEFAULT_ACTION_CAP).unwrap();
    set.actions() == [vec![-1.0], vec![0.0], vec![1.0]]
}

pub fn make_all_envs() -> usize {
    ENV_NAMES
        .iter()
        .filter(|n| make_env(n, &fsq::envs::EnvOptions::for_env(n)).is_ok())
        .count()
}
