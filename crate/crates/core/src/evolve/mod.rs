//! Time-domain propagation on a torus of `L` unit cells.
//!
//! The damped wave equation `w ∂_t²u − div(G∇u) + b ∂_t u = 0` is stepped
//! pseudospectrally; [`HeatComparator`] gives the limiting heat flow with
//! homogenized coefficients; [`floquet_transform`] decomposes torus fields
//! into quasi-momentum slices and [`BandPropagator`] evolves the first
//! Bloch band alone.

mod floquet;
mod heat;
mod propagator;
mod wave;

pub use floquet::{floquet_transform, inverse_floquet, sigma_grid, FloquetSlice, FloquetTransform};
pub use heat::{heat_comparator, HeatComparator};
pub use propagator::{first_band_propagate, operator_form, sigmas_in_ball, BandPropagator, SIGMA_MATCH};
pub use wave::{
    cfl_limit, run_damped_wave, run_damped_wave_with, wrap_time, InitialData, StiffnessOperator, WaveOptions,
    WaveSolver, WaveState,
};
