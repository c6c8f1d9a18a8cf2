//! Simulator and analysis toolkit for the non-Hermitian SSH model on a
//! two-qubit (electron ⊗ nuclear) register.
//!
//! The crate covers the full chain from the Bloch Hamiltonian to extracted
//! topology:
//!
//! - [`ssh_model`] — H(k), exact complex eigenstructure, exceptional points
//!   and phase classification.
//! - [`dynamics`] — non-unitary Schrödinger evolution, decay-based
//!   eigenstate preparation, and the measurement-basis rotation trick.
//! - [`dilation`] — the Hermitian two-qubit dilation: the metric M(t), its
//!   square-root factor η(t), the dilated generator Λ(t) ⊗ I + Γ(t) ⊗ σz,
//!   unitary evolution and nuclear-spin post-selection.
//! - [`pulse`] — lowering of the dilated generator onto a two-tone microwave
//!   schedule for an NV-style level structure, plus verification against the
//!   rotating-wave effective Hamiltonian.
//! - [`readout`] — spin-dependent photoluminescence readout: the 4×4
//!   population inversion, simplex-constrained normalization and Poisson
//!   shot noise.
//! - [`topology`] — winding numbers from model eigenvectors and from
//!   measured spin textures, including the 4π half-winding extension.
//! - [`runner`] — parameter sweeps, reproduction of the bundled reference
//!   tables, and file I/O shared with the command-line frontend.
//!
//! Units are fixed throughout: times in μs, angular frequencies in rad/μs.

pub mod linalg;

pub mod dilation;
pub mod dynamics;
pub mod pulse;
pub mod readout;
pub mod reference;
pub mod runner;
pub mod ssh_model;
pub mod topology;

mod book;

pub use linalg::{C64, M2, M4, V2, V4};
