//! Seeded replication experiments on the two base scenarios.

pub mod config;
pub mod experiment;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod schedule;

pub use config::ExperimentConfig;
pub use experiment::{run_experiment, ExperimentSpec, ExperimentSummary, SummaryRow, ORACLE_ROW, WMPR_ROW};
pub use oracle::{mse_strengths, oracle_mspe, true_probabilities, OracleMspe};
pub use scenario::{generate_y, make_scenario, BaseScenario, ErrorFamily, TruthSpec};
pub use schedule::synthetic_design;
