//! Classical simulator and optimization workbench for witness-assisted
//! variational eigensolvers on few-qubit Hamiltonians.
//!
//! The crate provides:
//!
//! * sparse Pauli-sum Hamiltonians with dense eigendecomposition backends
//!   ([`pauli`], [`hamiltonians`]),
//! * exact statevector simulation of trial-state preparation and controlled
//!   time evolution ([`state`], [`ansatz`]),
//! * the single-control-qubit eigenstate witness: reduced density matrix,
//!   purity/entropy diagnostics, and the phase-based energy estimator,
//!   with optional finite-shot tomography ([`witness`]),
//! * the particle-swarm style variational optimizer with restart and
//!   acceptance logic for ground and excited eigenstate searches
//!   ([`optimizer`]),
//! * iterative phase estimation and rejection-filtering Bayesian phase
//!   estimation for eigenvalue refinement ([`phase_estimation`]),
//! * energy-only and folded-spectrum baselines for comparison studies
//!   ([`baselines`]).
//!
//! Everything is deterministic given a seed: randomness flows through
//! counter-derived ChaCha streams (see [`rng`]), so results are bit-stable
//! across runs and across worker counts.

pub mod ansatz;
pub mod baselines;
pub mod dd;
pub mod hamiltonians;
pub mod optimizer;
pub mod pauli;
pub mod phase_estimation;
pub mod rng;
pub mod state;
pub mod witness;

pub use num_complex::Complex64;
