//! Object-oriented data analysis for samples of attributed binary trees.
//!
//! Trees are stored as sets of level-order node indices with a fixed-length
//! attribute vector per node. The crate provides the tree metric, median and
//! mean trees, structure and attribute treelines, principal treeline analysis,
//! and a JSON corpus format with normalization and a synthetic generator.

pub mod center;
pub mod dataset;
pub mod error;
pub mod metric;
pub mod principal;
pub mod tree;
pub mod treeline;

pub use error::{Error, Result};
pub use tree::{AttributedTree, NodeIndex, TreeSample, TreeTopology};
