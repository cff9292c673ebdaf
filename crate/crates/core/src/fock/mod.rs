//! Bosonic occupation-number bases, sparse second-quantized operators and
//! initial states.

pub mod basis;
pub mod hamiltonian;
pub mod operator;
pub mod state;

pub use basis::{FockBasis, Sector, DEFAULT_DIMENSION_CAP};
pub use hamiltonian::{
    bond_hop, hop_term, hopping_operator, interaction_operator, interaction_operator_q,
    number_operator, restrict_hamiltonian, site_number, HamiltonianSpec,
};
pub use operator::SparseOperator;
pub use state::{mott_state, shell_state, QuantumState, StateEntry};
