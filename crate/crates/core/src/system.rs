//! A simulated system: basis, Hamiltonian, propagator and initial state.

use crate::dynamics::{Propagator, PropagatorOptions};
use crate::error::Result;
use crate::fock::{FockBasis, HamiltonianSpec, QuantumState, SparseOperator};
use crate::lattice::Lattice;

#[derive(Debug, Clone)]
pub struct System {
    pub basis: FockBasis,
    pub spec: HamiltonianSpec,
    pub propagator: Propagator,
    pub initial: QuantumState,
    /// Hash of the configuration that produced the system, if any.
    pub config_hash: Option<String>,
}

impl System {
    pub fn new(
        basis: &FockBasis,
        spec: HamiltonianSpec,
        initial: QuantumState,
        options: PropagatorOptions,
    ) -> Result<Self> {
        basis.check_same(initial.basis())?;
        let h = spec.build(basis)?;
        Ok(Self {
            basis: basis.clone(),
            propagator: Propagator::new(h, options)?,
            spec,
            initial,
            config_hash: None,
        })
    }

    pub fn with_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn lattice(&self) -> &Lattice {
        self.basis.lattice()
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        self.propagator.hamiltonian()
    }

    /// Evolved states at each time.
    pub fn states(&self, times: &[f64]) -> Result<Vec<QuantumState>> {
        self.propagator.evolve_many(&self.initial, times)
    }
}
