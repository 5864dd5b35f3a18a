use thiserror::Error;

use crate::tree::NodeIndex;

/// Errors raised by the tree algebra, metrics and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("the root (index 1) has no parent")]
    RootHasNoParent,
    #[error("node index 0 is not a valid level-order index")]
    ZeroIndex,
    #[error("topology does not contain the root (index 1)")]
    MissingRoot,
    #[error("node {index} is an orphan: parent {parent} is absent")]
    OrphanNode { index: NodeIndex, parent: NodeIndex },
    #[error("node {index} lies on level {level}, above the level cap {cap}")]
    LevelCapExceeded {
        index: NodeIndex,
        level: u32,
        cap: u32,
    },
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("arity must be positive")]
    ZeroArity,
    #[error("attribute buffer has {found} values, expected {expected}")]
    AttributeCount { expected: usize, found: usize },
    #[error("non-finite attribute at node {index}, slot {slot}")]
    NonFiniteAttribute { index: NodeIndex, slot: usize },
    #[error("duplicate node index {0}")]
    DuplicateNode(NodeIndex),
    #[error("node {0} is outside the support")]
    NotInSupport(NodeIndex),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("duplicate tree id {0:?}")]
    DuplicateId(String),
    #[error("tree is not an attribute subtree of the enclosing tree")]
    NotSubtree,
    #[error("invalid structure treeline: {0}")]
    InvalidTreeline(String),
    #[error("treeline direction has zero weighted norm")]
    ZeroDirection,
    #[error("sample has no attribute variation about the structure projections")]
    DegenerateSample,
    #[error("node {0} has no normalization record")]
    UnknownNode(NodeIndex),
    #[error("invalid synthetic specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
