//! Configuration, run drivers, learning-curve output and the
//! discretization benchmark.

pub mod bench;
pub mod config;
pub mod curve;
pub mod plot;
mod run;

pub use bench::{bench_discretization, format_table, BenchRow};
pub use config::{load_config, Algo, RunConfig};
pub use curve::{first_success, read_curve, rolling_means, CurveWriter};
pub use run::{
    agent_q_table, dqn_q_table, fsq_q_table, lattice_oracle, oracle_check_agent, run_eval, run_oracle_check, run_train, Agent,
    EvalReport, OracleReport, TrainOutcome, EXIT_EXHAUSTED, EXIT_NUMERIC, EXIT_SOLVED, ORACLE_TOL, SUCCESS_WINDOW,
};
