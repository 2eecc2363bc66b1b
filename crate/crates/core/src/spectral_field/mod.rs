//! Periodic grids, spectral transforms, Fourier multipliers and
//! Littlewood-Paley blocks.

pub mod dyadic;
pub mod fft;
mod field;
mod grid;
pub mod io;
pub mod kernels;
pub mod multipliers;
pub mod random;

pub use dyadic::{
    block_norms, dyadic_block, dyadic_cutoffs, field_block_norms, low_pass, lp_check, BlockNorms,
    DyadicCutoffs, DyadicDecomposition, LpCheckReport,
};
pub use field::{fields_of, spectra_of, Field, Spectrum, TensorField, VectorField};
pub use grid::{Grid, DEFAULT_DEALIAS_FRACTION};
pub use multipliers::{
    dealias, dealiased_product, derivative, div, div_tensor, div_transpose, friedrichs_project,
    grad, grad_vector, lambda_pow, laplacian, leray_project,
};
pub use random::random_field;
