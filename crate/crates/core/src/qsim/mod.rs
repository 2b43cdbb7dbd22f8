//! Dense state-vector engine covering the states, gates and projective
//! measurements the protocols need. Registers stay tiny (one entangled group
//! plus any probes), so everything is plain dense linear algebra.

mod density;
mod measure;
mod state;
mod unitary;

pub use density::{partial_trace, trace_distance, DensityMatrix, DENSITY_TOL};
pub use measure::{
    bell_probabilities, ghz_probabilities, measure_bell, measure_ghz, measure_z, project_z, BellOutcome, GhzOutcome,
    Sign, ZOutcome,
};
pub use state::{StateVector, MAX_QUBITS, NORM_TOL};
pub use unitary::{unitarity_residual, Unitary, UNITARITY_TOL};
