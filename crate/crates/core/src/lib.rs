//! Simulation toolkit for the quantum-dot dark exciton (DE) and the
//! spin-blockaded biexciton XX⁰_T3 in a Faraday-configuration magnetic field.
//!
//! The crate is organised bottom-up:
//!
//! - [`units`]: physical constants, the µeV/ns/T unit convention and the
//!   validated parameter set.
//! - [`spin`]: static and laser-driven 4-level Hamiltonians, qubit
//!   eigensystems, mixing angle θ_B and Zeeman line splittings.
//! - [`bloch`]: closed-form Bloch-sphere precession and degree of circular
//!   polarization (DCP) formulas.
//! - [`liouville`]: the dissipative level model (vacuum, DE, biexciton,
//!   charge and optional excited biexciton levels), the Lindblad
//!   superoperator, steady states, propagation and a quantum-jump Monte
//!   Carlo unraveling.
//! - [`correlator`]: polarization-resolved g²(τ) via the quantum regression
//!   theorem, DCP assembly, detector response and Fourier analysis.
//! - [`fit`]: Levenberg–Marquardt estimation and the DCP visibility
//!   estimator.
//! - [`config`], [`io`] and [`cli`]: run configuration, CSV files and the
//!   `dexsim` command line front end.
//!
//! Energies are in µeV, times in ns, rates in ns⁻¹, angular frequencies in
//! rad/ns and fields in tesla throughout.

pub mod bloch;
pub mod cli;
pub mod config;
pub mod correlator;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod liouville;
pub mod spin;
pub mod units;

pub use units::{PhysicalParams, HBAR, MU_B};
