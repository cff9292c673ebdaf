//! Time evolution under full and localized Hamiltonians, Heisenberg-picture
//! expectations and remainder pairings.

pub mod free_field;
pub mod localized;
pub mod propagator;
pub mod trajectory;

pub use free_field::{one_body_density_oracle, one_body_propagator};
pub use localized::{
    check_support, heisenberg_pairing, localized_heisenberg, rem_expectations, remainder_pairings,
    LocalizedPair, RemainderPairings, LOCALITY_TOL,
};
pub use propagator::{Method, Propagator, PropagatorOptions};
pub use trajectory::{
    fmt_f64, heisenberg_expectation, record, uniform_grid, validate_time_grid, Trajectory,
};
