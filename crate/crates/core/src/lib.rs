//! Spin-boson reaction-coordinate simulator for dissipative multiphoton
//! Jaynes-Cummings models.
//!
//! A spin coupled to an underdamped bosonic environment is mapped onto a spin
//! plus one or two reaction coordinates (RCs) with Ohmic residual baths. A
//! time-dependent unitary frame map turns that model into an n-photon
//! Jaynes-Cummings model. Both frames are propagated and compared.
//!
//! Units: energies in units of the RC frequency, `hbar = 1`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod densecx;
pub mod dissipator;
pub mod error;
pub mod evolve;
pub mod hilbert;
pub mod metrics;
pub mod models;
pub mod par;
pub mod scenarios;
pub mod spectral;
pub mod tol;
pub mod transforms;

pub use densecx::{c64, DensityMatrix, Operator};
pub use error::{Error, Result};
pub use tol::Tolerances;
