//! Scenario generation, parameter sweeps and trend statistics.

mod scenario;
mod sweep;
mod trend;

pub use scenario::{generate_mining_scenario, generate_nfv_scenario, path_gain, MiningScenarioParams, NfvScenarioParams, Range};
pub use sweep::{
    aggregate, mining_delays, run_mining, run_placement, run_sweep, write_aggregate_csv, write_detail_csv, AggregateRow, Axis, Feasible,
    Solver, SweepConfig, SweepRow, DETAIL_HEADER,
};
pub use trend::{ranks, spearman, trend_test, Direction, TrendResult};
