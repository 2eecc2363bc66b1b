//! Linear building blocks: transport, variable-coefficient Stokes with its
//! pressure, and the damped mixed system.

pub mod mixed;
pub mod momentum;
pub mod report;
pub mod scenarios;
pub(crate) mod stepping;
pub mod transport;

pub use mixed::{
    mixed_decay_spectrum, mixed_estimate_check, mixed_field_solve, mixed_solve_mode, mode_eigenvalues,
    mode_exponential, DecayRow, MixedRun, Regime,
};
pub use momentum::{
    elliptic_pressure_solve, linearized_momentum_solve, momentum_estimate_check, select_n0,
    stokes_heat_solve, EstimateCheckConfig, MomentumProblem, MomentumRun, PressureOptions,
    PressureSolution, StokesSolution,
};
pub use report::EstimateReport;
pub use scenarios::{mixed_scenario, momentum_scenario, transport_scenario, ScenarioConfig};
pub use transport::{transport_estimate_check, transport_solve, TransportOptions};
