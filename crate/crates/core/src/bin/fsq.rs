use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fsq::envs::{make_env, EnvOptions, ENV_NAMES};
use fsq::harness::{
    bench_discretization, format_table, load_config, run_eval, run_oracle_check, run_train, Algo, RunConfig,
    EXIT_NUMERIC,
};

#[derive(Parser)]
#[command(name = "fsq", about = "Finite Step Q-learning experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write curve.csv, curve.svg and checkpoint.ckpt.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        env: Option<String>,
        #[arg(long, value_parser = ["fsq", "dqn"])]
        algo: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy rollouts of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        env: Option<String>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare learned Q-values on lattice_mdp against value iteration.
    OracleCheck {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Output-head counts for FSQ versus a cartesian grid.
    BenchDiscretization {
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,30")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// List the built-in environments.
    Envs,
}

fn base_config(path: Option<&PathBuf>) -> fsq::Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> fsq::Result<u8> {
    match cli.command {
        Command::Train {
            config,
            env,
            algo,
            seed,
            episodes,
            out,
        } => {
            let mut cfg = base_config(config.as_ref())?;
            if let Some(env) = env {
                cfg.env_name = env;
            }
            if let Some(algo) = algo {
                cfg.algo = algo.parse::<Algo>().map_err(|e| fsq::Error::validation("algo", e))?;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(n) = episodes {
                cfg.episodes = n;
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let outcome = run_train(&cfg)?;
            let last = outcome.records.len();
            match outcome.solved_at {
                Some(i) => println!("solved at episode {} (threshold {:.4})", i + 1, outcome.threshold.unwrap_or_default()),
                None => println!("not solved after {last} episodes"),
            }
            println!("curve: {}", outcome.curve_path.display());
            println!("checkpoint: {}", outcome.checkpoint_path.display());
            Ok(outcome.exit_code as u8)
        }
        Command::Eval {
            checkpoint,
            env,
            episodes,
            seed,
        } => {
            let report = run_eval(&checkpoint, env.as_deref(), episodes, seed)?;
            for (i, r) in report.returns.iter().enumerate() {
                println!("episode {i}: return {r:.4}");
            }
            println!("mean return {:.4}", report.mean_return);
            Ok(0)
        }
        Command::OracleCheck { config } => {
            let cfg = base_config(config.as_ref())?;
            let report = run_oracle_check(&cfg)?;
            println!(
                "max |Q - Q*| = {:.5}, tolerance {:.5}, episodes {}: {}",
                report.max_deviation,
                report.tolerance,
                report.episodes_trained,
                if report.passed { "PASS" } else { "FAIL" }
            );
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::BenchDiscretization { dims, levels } => {
            print!("{}", format_table(&bench_discretization(&dims, levels), levels));
            Ok(0)
        }
        Command::Envs => {
            for name in ENV_NAMES {
                let env = make_env(name, &EnvOptions::for_env(name))?;
                println!("{}", env.descriptor());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                ExitCode::from(EXIT_NUMERIC as u8)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
