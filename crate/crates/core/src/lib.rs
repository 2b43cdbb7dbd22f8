//! Simulator and adversary-analysis toolkit for semi-quantum protocols built
//! from Bell/GHZ states and single decoy particles: private comparison (two
//! and multi-party), three-party key agreement, summation and anonymous
//! ranking.
//!
//! A quantum third party (TP) prepares every qubit; "classical" users may only
//! measure in the Z basis (and regenerate the result) or reflect. Channel
//! attacks plug in as hooks on the TP→user and user→TP legs, insider attacks
//! as alternative TP or user strategies.

pub mod adversary;
pub mod error;
pub mod metrics;
pub mod protocols;
pub mod qsim;
pub mod rng;
pub mod roles;

pub use error::{Error, Result};
