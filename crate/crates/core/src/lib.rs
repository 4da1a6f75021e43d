//! Workload-driven materialized view advisor for star-schema warehouses.
//!
//! The advisor takes a file of GPSJ queries and a statistics document,
//! clusters similar queries by their representative attributes, merges each
//! cluster's candidate views through a levelwise lattice walk, estimates
//! view sizes with the Yao/Cardenas formulas, and greedily selects a
//! configuration under a profit, profit/space, or hybrid objective. It emits
//! CREATE MATERIALIZED VIEW statements and a JSON report.
//!
//! The [`harness`] module generates seeded micro-warehouses and evaluates
//! the GPSJ fragment directly; it backs the oracle-style tests that pin the
//! estimators and the view-merging semantics.

pub mod catalog;
pub mod clustering;
pub mod cost;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod pipeline;
pub mod selection;
pub mod similarity;
pub mod views;
pub mod workload;

mod bits;
#[cfg(test)]
pub(crate) mod test_fixtures;

pub use error::{AdvisorError, Result};
pub use pipeline::{run_advisor, AdvisorOptions, AdvisorOutcome, RunReport};
