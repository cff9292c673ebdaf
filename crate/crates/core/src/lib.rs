//! Long-range Bose-Hubbard dynamics on small lattices.
//!
//! The crate builds occupation-number Hamiltonians with power-law couplings,
//! propagates states exactly (dense eigendecomposition) or with Lanczos
//! Krylov steps, and evaluates moving localization observables and
//! propagation-bound checkers on the resulting trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod astlo;
pub mod couplings;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod hash;
pub mod lattice;
pub mod probes;
pub mod system;

pub use couplings::{CouplingKind, CouplingMatrix};
pub use error::{Error, Result};
pub use fock::{FockBasis, HamiltonianSpec, QuantumState, Sector, SparseOperator};
pub use hash::{canonical_json, config_hash};
pub use lattice::{Lattice, Region};
pub use num_complex::Complex64;
pub use probes::{BoundReport, Verdict};
pub use system::System;
