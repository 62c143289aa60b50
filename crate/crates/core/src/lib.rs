//! Mining event-related shopping aspects from query-click logs.
//!
//! The pipeline: filter event-related rows out of a click log
//! ([`ingest`]), build the query/product-type bipartite graph ([`graph`]),
//! weight edges with a Bayesian click-through estimate ([`weighting`]),
//! cluster queries by iterated threshold agglomeration ([`clustering`]), and
//! report each cluster as a CTR-ranked product-type carousel ([`carousel`]).
//! [`evaluation`] scores the result and [`synthgen`] plants recoverable
//! ground truth for tests.

pub mod carousel;
pub mod clustering;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod ingest;
pub mod synthgen;
pub mod weighting;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use error::{MineError, Result};
