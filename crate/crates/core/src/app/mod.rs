//! Scenario configuration, the coupled time step, run orchestration and
//! output management.

pub mod config;
pub mod run;
pub mod scenario;
pub mod step;

pub use config::{BlockLoad, GammaSpec, KernelKind, MethodKind, ResolvedConfig, ScenarioKind, SimulationConfig};
pub use run::{run_convergence_sweep, run_resolved, run_scenario, RunManifest, RunOutput, RunStatus, SweepResult};
pub use scenario::Scenario;
pub use step::{CoupledState, StepRecord, Stepper};
