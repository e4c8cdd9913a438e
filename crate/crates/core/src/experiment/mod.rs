//! Scenario files, sweeps, beampatterns, Monte-Carlo validation and result
//! emission.

pub mod beampattern;
pub mod config;
pub mod emit;
pub mod sweep;
pub mod validate;

pub use beampattern::{beampattern, default_grid, BeampatternRow, GAIN_FLOOR_DB};
pub use config::{load_scenario, parse_scenario, save_scenario, scenario_to_toml};
pub use emit::{emit_rows, read_rows, OutputFormat};
pub use sweep::{run_grid, run_sweep, ResultRow, SweepAxis, SweepRun, SweepSpec, SweepTable, TraceRow};
pub use validate::{validate_statistics, ValidationReport, ValidationRow};
