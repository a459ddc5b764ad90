//! Floquet fibers of the periodic operator and the first Bloch band of the
//! dissipative pencil `(P_p^σ − iλb_p − λ²w_p)u = 0`.
//!
//! Cell functions are represented by Fourier coefficients on the modes
//! `k ∈ {-N/2..N/2-1}^d`, so the `L²` inner product on the cell is the
//! Euclidean one on coefficient vectors. Pair vectors `(u, v)` stack two
//! such blocks.

mod band;
mod dispersion;
mod eigen;
mod fiber;

pub use band::{dense_cutoff_limit, estimate_gap, first_band, BandOptions, BandSample, FirstBand, SpectralGap};
pub use dispersion::{linear_fit, verify_dispersion, DispersionReport, DispersionSample, BOUND_MARGIN};
pub use eigen::{
    balance, companion_eigenvalues, fiber_resolvent_solve, fiber_spectrum, refine_pencil, zero_mode_report, EigenPair,
    Refined, Region, ZeroModeReport, NEAR_SINGULAR_CONDITION,
};
pub use fiber::{assemble_fiber, mode_index, mode_k, sigma_array, BlochFiber, CellSpectra, ALIASING_TOLERANCE};
