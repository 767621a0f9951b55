//! Scenario configuration, the figure presets, the frame-comparison pipeline,
//! parameter sweeps and the self-check suites behind `validate`.

mod config;
mod presets;
mod run;
mod sweep;
mod validate;

pub use config::{set_path, Scenario, ScenarioConfig, Span, SweepAxis, SCHEMA};
pub use presets::{preset, PRESETS};
pub use run::{
    intervals_agree, run_comparison, RunArtifact, RunFailure, SideDiagnostics, Summary,
    WitnessSeries, WitnessSummary, FRAMED_DT_MAX,
};
pub use sweep::{run_sweep, sweep_points, PointError, SweepPoint, SweepResult};
pub use validate::{validate, Bound, Fault, SuiteResult, ValidationReport};
