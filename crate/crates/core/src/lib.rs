//! Multi-time path probabilities of dynamic Bayesian networks for quantum
//! systems.
//!
//! The joint distribution P(x_0,…,x_N) of local outcomes along a unitary
//! evolution is available through four routes that agree to round-off:
//!
//! * [`bayesnet::joint_distribution`]: the direct sum over eigenstates,
//! * [`protocol::postselect_distribution`]: postselected expectations on
//!   independent copies (with [`protocol::sample_protocol`] as the shot-based
//!   Monte Carlo of the same experiment),
//! * [`povm::distribution_via_broadcast`]: local measurements on a broadcast
//!   state,
//! * [`povm::povm_distribution`]: the POVM elements J_x on independent copies.
//!
//! [`models`] builds the driven coherent qubit and the correlated qubit pair,
//! and [`povm`] also derives work distributions with first-law and Jarzynski
//! checks.

pub mod bayesnet;
pub mod error;
pub mod exec;
pub mod models;
pub mod numeric;
pub mod povm;
pub mod protocol;
pub mod qstate;
pub mod random;
pub mod report;

pub use bayesnet::{Method, Path, PathDistribution, Scenario, Settings, TimePoint};
pub use error::{Error, Result};
pub use exec::Execution;
pub use nalgebra::{DMatrix, DVector};
pub use qstate::{ComplexOperator, DensityMatrix, SpectralDecomposition, Tolerances, Unitary, C64};
