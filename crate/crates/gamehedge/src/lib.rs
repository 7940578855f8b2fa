//! Exact-arithmetic pricing and superhedging engine for game options
//! with gradual exercise and cancellation under proportional transaction
//! costs, on finite event trees.
//!
//! The crate is organized bottom-up:
//!
//! * [`rat`] — exact rational scalars and vectors (no floats anywhere);
//! * [`tree`] — finite event trees and process containers;
//! * [`polyhedra`] — polyhedral sets with dual representations and an
//!   exact LP solver;
//! * [`market`] — solvency cones, deferred solvency, no-arbitrage
//!   certification, liquidation strategies;
//! * [`stopping`] — mixed stopping times and payoff-process algebra;
//! * [`pricing`] — seller/buyer set ladders, bid and ask prices, hedge
//!   extraction and verification;
//! * [`dual`] — LP oracles for the dual price representations;
//! * [`io`] — JSON wire formats shared by the CLI and tests.

pub mod error;
pub mod rat;
pub mod tree;
pub mod polyhedra;
pub mod market;
pub mod stopping;
pub mod pricing;
pub mod dual;
pub mod io;

#[cfg(test)]
pub(crate) mod test_fixtures;

pub use error::{Error, Result};
