//! Numerical laboratory for the relational emergence of time.
//!
//! A global stationary eigenstate of a bipartite (system ⊗ clock) Hamiltonian
//! carries all correlations between a system and its environment. Conditioning
//! the global state on a family of evolved clock states produces a
//! λ-parametrized system state, an effective Hermitian potential `V_S(λ)` and
//! a complex scalar `ℰ(λ)`, such that the conditional state solves a
//! time-dependent Schrödinger equation with generator `H_S + V_S(λ)`. This
//! crate constructs such eigenstates, derives the effective potential, checks
//! the derivation numerically, and exports exactly solvable time-dependent
//! Hamiltonian/solution pairs.
//!
//! Module map:
//! - [`hilbert`]: dense complex linear algebra (kron, Hermitian eigh, unitary
//!   exponentials, clock projection).
//! - [`model`]: bipartite Hamiltonian specifications and builders.
//! - [`spectral`]: eigenspace grouping, state selection, invariance checks.
//! - [`relational`]: clock trajectories, effective potential/energy, phase
//!   accumulation, conditional states, envariance and pointer diagnostics.
//! - [`dynamics`]: free and driven propagation, TDSE residuals, comparisons.
//! - [`readout`]: clock-as-instrument expectation curves and resolution.
//! - [`scenarios`]: curated end-to-end runs and solvable exports.
//! - [`cli`]: config ingestion, execution, CSV/JSON export, exit codes.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod model;
pub mod readout;
pub mod relational;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
pub use hilbert::{CMatrix, CVector, EighResult, C64};
