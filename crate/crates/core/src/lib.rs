//! In-network principal component aggregation for tree-routed sensor networks.

// NaN must fail range checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod cli;
pub mod dist_cov;
pub mod dist_pim;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod runtime;
pub mod topology;

pub use error::{Error, Result};
