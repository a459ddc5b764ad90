//! Damped waves in periodic and asymptotically periodic media.
//!
//! The crate covers the whole numerical pipeline: coefficient fields
//! ([`medium`]), the periodic cell problem ([`homogenize`]), the first Bloch
//! band of the dissipative pencil ([`bloch`]), the classical flow of the
//! symbol ([`flow`]), time stepping on a large torus ([`evolve`]) and the
//! weighted-norm and decay-fit machinery ([`analysis`]).

pub mod analysis;
pub mod bloch;
pub mod error;
pub mod evolve;
pub mod flow;
pub mod homogenize;
pub mod medium;
pub mod reduce;
pub mod spectral;

mod halton;

pub use error::{Error, Result};
pub use num_complex::Complex64;
