//! Nonlinear density-dependent viscoelastic solver: state, right-hand side,
//! time stepping, constraint diagnostics and the damped reformulation.

pub mod invariants;
pub mod reformulation;
pub mod rhs;
mod state;
pub mod stepper;
pub mod sweep;

pub use invariants::{
    constraint_residuals, data_size, diagnostics_csv, invariants_report, ConstraintResiduals,
    DiagnosticsRow, YMonitor, DIAGNOSTICS_CSV_HEADER,
};
pub use reformulation::{d_reformulation, DFormulation, DResiduals};
pub use rhs::{rhs, Rates};
pub use state::{FriedrichsMask, SimState, SolverOptions};
pub use stepper::{simulate, step, AbortInfo, SimOptions, SimOutput, Stepper};
pub use sweep::{
    bootstrap_csv, bootstrap_monitor, friedrichs_ladder, ladder_csv, small_data_sweep, sweep_csv, BootstrapConfig,
    BootstrapReport, BootstrapRow, LadderRow, SweepConfig, SweepRow, BOOTSTRAP_CONDITIONS,
};
