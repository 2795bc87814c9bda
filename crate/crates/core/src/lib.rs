//! Sparse mean-CVaR portfolio selection.
//!
//! Builds long-only portfolios that minimize a mixed CVaR / expected-return
//! objective under a hard cardinality budget `m`. The cardinality constraint
//! is handled through a tailed quadratic relaxation: the mass of a weight
//! vector beyond its `m` largest components is charged at `1/(2*gamma)`, so
//! the relaxation tightens to the exact budget as `gamma` shrinks. The
//! relaxed model is solved by proximal alternating linearized minimization
//! (PALM) whose projection step onto the CVaR polytope runs a nested
//! fixed-point proximity iteration, so no external optimizer is needed.
//!
//! The crate also ships a moving-window backtest engine with a proportional
//! transaction-cost model, the usual evaluation statistics (Sharpe ratio,
//! CAPM alpha with a right-tailed t-test, support-overlap), and a synthetic
//! sparse-regression suite that validates the relaxation against exhaustive
//! support enumeration at small scale.
//!
//! The crate is `no_std`-compatible: disable the default `std` feature and
//! enable `libm` to supply the scalar math routines.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub mod backtest;
mod error;
mod fmath;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod operators;
pub mod panel;
pub mod rng;
pub mod solver;
pub mod sparse_regress;

pub use backtest::{BacktestResult, Portfolio};
pub use error::{Error, Result};
pub use linalg::{Matrix, SpectralEstimate};
pub use model::ProblemData;
pub use operators::SplitVector;
pub use panel::{ReturnPanel, Window, WindowSlice};
pub use solver::{ExtractMode, SolveReport, SolverConfig};
