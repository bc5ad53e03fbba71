//! Numerical toolkit for a double-well dipole coupled to a tight-binding
//! cavity array: full and two-level Hamiltonians in the Coulomb and dipole
//! gauges, lattice self-energies, closed-form RWA transmission, the polaron
//! picture, and a boundary-matching scattering solver with a time-evolution
//! cross-check.
//!
//! Units: ħ = 1 and energies are quoted in units of the cavity frequency.

pub mod circuit;
pub mod error;
pub mod krylov;
pub mod lattice;
pub mod matching;
pub mod matter;
pub mod models;
pub mod polaron;
pub mod rwa_scattering;
pub mod spectral;
pub mod sweeps;

pub use error::{Error, Result};
pub use lattice::Lattice;

pub use num_complex::Complex64;
