//! Pseudospectral toolkit for density-dependent incompressible viscoelastic
//! flows on a periodic box.

pub mod error;
pub mod linear_models;
pub mod viscoelastic;
pub mod initial_data;
pub mod besov;
pub mod bony;
pub mod spectral_field;

pub use error::{Error, Result};

/// Version of this crate, echoed in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
