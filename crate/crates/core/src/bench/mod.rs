//! Scenarios, trajectory files, the RRT-Connect input generator and the
//! benchmark runner.

pub mod corpus;
pub mod planner;
pub mod runner;
pub mod scenario;
pub mod trajfile;

pub use planner::plan_rrt_connect;
pub use runner::{run_benchmark, BenchConfig, BenchInput, BenchMethod, BenchRecord, BenchReport};
pub use scenario::{load_scenario, parse_scenario, save_scenario, scenario_to_string, Scenario};
pub use trajfile::{export_trajectory, import_trajectory, trajectory_to_string};
