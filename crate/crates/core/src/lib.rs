//! Ground-state toolkit for the two-dimensional spin-1/2 XXZ Heisenberg model
//! with Dzyaloshinskii–Moriya interaction (DMI) in a perpendicular field.
//!
//! Ground states are obtained either variationally, with a hardware-efficient
//! ansatz evaluated on an exact statevector simulator ([`vqe`]), or exactly,
//! with a thick-restart Lanczos solver on the matrix-free Pauli operator
//! ([`exact`]). From the ground state the crate computes per-site
//! magnetization and the discrete topological charge ([`observables`]), and
//! [`sweep`] scans the field to locate skyrmion-like transitions.
//!
//! Conventions used throughout:
//! - spin operators are Pauli matrices (eigenvalues ±1);
//! - qubit 0 is the least-significant bit of a basis-state index;
//! - sites are indexed row-major, `index = ix + iy * nx`, and qubit `q`
//!   represents site `q`;
//! - energies and fields are in units of `|J∥|`.

pub mod ansatz;
pub mod bench;
pub mod error;
pub mod exact;
pub mod hamiltonian;
pub mod io;
pub mod lattice;
pub mod observables;
pub mod simulator;
pub mod sweep;
pub mod vqe;

pub use error::{Error, Result};

/// Default upper bound on the register size (2^26 amplitudes ≈ 1 GiB).
pub const DEFAULT_MAX_QUBITS: usize = 26;
