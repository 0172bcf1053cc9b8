//! Floquet analysis of dynamical tunneling in amplitude- and phase-modulated
//! optical lattices.
//!
//! The crate propagates wavepackets on a discrete momentum lattice under two
//! periodically driven pendulum Hamiltonians, builds the one-period evolution
//! operator, extracts its eigenphases and eigenstates, and provides the
//! phase-space (Husimi, strobe) and spectral tools used to read off tunneling
//! frequencies.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod config;
pub mod error;
pub mod floquet;
pub mod husimi;
pub mod io;
pub mod model;
pub mod propagator;
pub mod spectral;

pub use classical::{integrate_orbit, strobe_section, PhasePoint};
pub use error::{Error, Result};
pub use floquet::{analyze, dominant_frequencies, eigendecompose, floquet_matrix, FloquetModes, FrequencyLine, Parity};
pub use husimi::{husimi_grid, PhaseGrid};
pub use model::{DriveSign, Lattice, ModelSpec, NistParams, TexasParams};
pub use propagator::{coherent_state, evolve, evolve_series, mean_momentum, Propagator, StateVector, TimeSeries};
pub use spectral::{peak_frequencies, SpectralPeak};
