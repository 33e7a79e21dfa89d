//! Profile calibration and configuration search.

pub mod calibrate;
pub mod predict;
pub mod search;

pub use calibrate::{calibrate, geometric_points, CalibrationGrid, Microbenchmarks, SimulatedMachine};
pub use predict::{estimate, plan_for, predict_time, GraphStats, PlanFigures, TunerEstimate};
pub use search::{candidate_configs, divisors, tune, tune_stats, tune_with_candidates, Candidate, TuneOutcome};
