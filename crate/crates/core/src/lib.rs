//! Structure-preserving balanced truncation for discrete-time, linear
//! time-varying subsystems interconnected over finite directed graphs with a
//! one-step communication latency.
//!
//! The crate is organised along the reduction workflow:
//!
//! - [`sysmodel`]: graph, eventually time-periodic (ETP) schedules, the
//!   partitioned state-space realization and its file format.
//! - [`lmi`]: assembly of the stability, performance and generalized
//!   Lyapunov inequalities over the finite ETP window, and the eigenvalue
//!   based residual check used to accept any solution.
//! - [`sdp`]: an embedded primal-dual interior-point solver, objective
//!   builders and an SDPA sparse-format exporter.
//! - [`balance`]: balancing transformations from a pair of gramian sets.
//! - [`truncate`]: retained/truncated split and the reduced-order system.
//! - [`bounds`]: a priori error bounds on the reduction error.
//! - [`sim`]: simulation, adjoint simulation and empirical gain estimates.
//! - [`pipeline`]: the end-to-end driver and the five-agent reference corpus.

pub mod balance;
pub mod bounds;
mod error;
pub mod fmt;
pub mod lmi;
pub mod pipeline;
pub mod sdp;
pub mod sim;
pub mod sysmodel;
pub mod truncate;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type Vector = nalgebra::DVector<f64>;
