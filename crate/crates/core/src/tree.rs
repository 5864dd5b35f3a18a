//! Binary tree topologies in level-order indexing, attributed trees and samples.
//!
//! The root carries index 1; the left child of node `k` is `2k` and the right
//! child is `2k + 1`. A topology is therefore fully described by its index set,
//! which is kept sorted so every iteration runs in ascending index order.

use std::collections::HashSet;

use crate::error::{Error, Result};

pub type NodeIndex = u32;

/// Default maximum node level (root is level 0).
pub const DEFAULT_LEVEL_CAP: u32 = 16;

/// Largest level representable with `u32` indices.
const MAX_REPRESENTABLE_LEVEL: u32 = 30;

/// Parent of a non-root node.
pub fn parent_index(k: NodeIndex) -> Result<NodeIndex> {
    match k {
        0 => Err(Error::ZeroIndex),
        1 => Err(Error::RootHasNoParent),
        _ => Ok(k / 2),
    }
}

/// Level of node `k`, i.e. `floor(log2 k)`.
pub fn level_of(k: NodeIndex) -> u32 {
    debug_assert!(k > 0);
    31 - k.leading_zeros()
}

pub fn left_child(k: NodeIndex) -> NodeIndex {
    2 * k
}

pub fn right_child(k: NodeIndex) -> NodeIndex {
    2 * k + 1
}

/// A parent-closed set of level-order indices containing the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(transparent)]
pub struct TreeTopology {
    indices: Vec<NodeIndex>,
}

impl TreeTopology {
    /// Validates an index set against the default level cap.
    pub fn new<I: IntoIterator<Item = NodeIndex>>(indices: I) -> Result<Self> {
        validate_topology(indices, DEFAULT_LEVEL_CAP)
    }

    /// The single-node tree.
    pub fn root() -> Self {
        TreeTopology { indices: vec![1] }
    }

    /// Builds a topology from indices that are already sorted, unique and
    /// parent-closed.
    pub(crate) fn from_sorted_unchecked(indices: Vec<NodeIndex>) -> Self {
        debug_assert!(indices.first() == Some(&1));
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        TreeTopology { indices }
    }

    pub fn indices(&self) -> &[NodeIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: NodeIndex) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    /// Position of `k` in ascending index order.
    pub fn position(&self, k: NodeIndex) -> Option<usize> {
        self.indices.binary_search(&k).ok()
    }

    pub fn max_index(&self) -> NodeIndex {
        *self.indices.last().expect("topology always holds the root")
    }

    pub fn max_level(&self) -> u32 {
        level_of(self.max_index())
    }

    /// Number of levels (`max_level + 1`).
    pub fn levels(&self) -> u32 {
        self.max_level() + 1
    }

    /// Children of `k` present in this topology, left before right.
    pub fn children(&self, k: NodeIndex) -> impl Iterator<Item = NodeIndex> + '_ {
        [left_child(k), right_child(k)]
            .into_iter()
            .filter(move |&c| self.contains(c))
    }

    pub fn is_leaf(&self, k: NodeIndex) -> bool {
        self.contains(k) && self.children(k).next().is_none()
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeIndex> + '_ {
        self.indices.iter().copied().filter(|&k| self.is_leaf(k))
    }

    pub fn union(&self, other: &TreeTopology) -> TreeTopology {
        let (a, b) = (&self.indices, &other.indices);
        let mut out = Vec::with_capacity(a.len().max(b.len()));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        TreeTopology { indices: out }
    }

    pub fn intersection(&self, other: &TreeTopology) -> TreeTopology {
        let out = self
            .indices
            .iter()
            .copied()
            .filter(|&k| other.contains(k))
            .collect();
        TreeTopology { indices: out }
    }

    /// `IND(self) ⊆ IND(other)`.
    pub fn is_subtree_of(&self, other: &TreeTopology) -> bool {
        self.len() <= other.len() && self.indices.iter().all(|&k| other.contains(k))
    }

    /// Adds node `k`, whose parent must already be present.
    pub fn with_node(&self, k: NodeIndex) -> Result<TreeTopology> {
        let parent = parent_index(k)?;
        if !self.contains(parent) {
            return Err(Error::OrphanNode { index: k, parent });
        }
        let mut indices = self.indices.clone();
        if let Err(pos) = indices.binary_search(&k) {
            indices.insert(pos, k);
        }
        Ok(TreeTopology { indices })
    }

    /// Removes leaf `k`. Removing the root or an internal node is an error.
    pub fn without_leaf(&self, k: NodeIndex) -> Result<TreeTopology> {
        if k == 1 {
            return Err(Error::MissingRoot);
        }
        if let Some(child) = self.children(k).next() {
            return Err(Error::OrphanNode {
                index: child,
                parent: k,
            });
        }
        let indices = self.indices.iter().copied().filter(|&i| i != k).collect();
        Ok(TreeTopology { indices })
    }
}

/// Accepts an index set iff it is the index set of a binary tree whose depth
/// does not exceed `level_cap`.
pub fn validate_topology<I: IntoIterator<Item = NodeIndex>>(
    indices: I,
    level_cap: u32,
) -> Result<TreeTopology> {
    let mut sorted: Vec<NodeIndex> = indices.into_iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.first() == Some(&0) {
        return Err(Error::ZeroIndex);
    }
    if sorted.first() != Some(&1) {
        return Err(Error::MissingRoot);
    }
    let cap = level_cap.min(MAX_REPRESENTABLE_LEVEL);
    for &k in &sorted {
        let level = level_of(k);
        if level > cap {
            return Err(Error::LevelCapExceeded {
                index: k,
                level,
                cap: level_cap,
            });
        }
        if k > 1 && sorted.binary_search(&(k / 2)).is_err() {
            return Err(Error::OrphanNode {
                index: k,
                parent: k / 2,
            });
        }
    }
    Ok(TreeTopology { indices: sorted })
}

/// A topology with a fixed-arity real attribute vector on every node.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributedTree {
    topology: TreeTopology,
    arity: usize,
    /// Node-major, in ascending index order.
    attrs: Vec<f64>,
}

impl AttributedTree {
    pub fn new(topology: TreeTopology, arity: usize, attrs: Vec<f64>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ZeroArity);
        }
        let expected = topology.len() * arity;
        if attrs.len() != expected {
            return Err(Error::AttributeCount {
                expected,
                found: attrs.len(),
            });
        }
        for (pos, chunk) in attrs.chunks(arity).enumerate() {
            if let Some(slot) = chunk.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteAttribute {
                    index: topology.indices[pos],
                    slot,
                });
            }
        }
        Ok(AttributedTree {
            topology,
            arity,
            attrs,
        })
    }

    /// Builds a tree from `(index, attributes)` records in any order.
    pub fn from_nodes<I>(arity: usize, nodes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeIndex, Vec<f64>)>,
    {
        Self::from_nodes_with_cap(arity, nodes, DEFAULT_LEVEL_CAP)
    }

    pub fn from_nodes_with_cap<I>(arity: usize, nodes: I, level_cap: u32) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeIndex, Vec<f64>)>,
    {
        if arity == 0 {
            return Err(Error::ZeroArity);
        }
        let mut nodes: Vec<(NodeIndex, Vec<f64>)> = nodes.into_iter().collect();
        nodes.sort_by_key(|(k, _)| *k);
        if let Some(w) = nodes.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateNode(w[0].0));
        }
        for (_, a) in &nodes {
            if a.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: a.len(),
                });
            }
        }
        let topology = validate_topology(nodes.iter().map(|(k, _)| *k), level_cap)?;
        let attrs = nodes.into_iter().flat_map(|(_, a)| a).collect();
        Self::new(topology, arity, attrs)
    }

    /// All-zero attributes on `topology`.
    pub fn zeros(topology: TreeTopology, arity: usize) -> Result<Self> {
        let n = topology.len() * arity;
        Self::new(topology, arity, vec![0.0; n])
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Flat node-major attribute buffer.
    pub fn attribute_buffer(&self) -> &[f64] {
        &self.attrs
    }

    pub fn attrs_of(&self, k: NodeIndex) -> Option<&[f64]> {
        self.topology
            .position(k)
            .map(|p| &self.attrs[p * self.arity..(p + 1) * self.arity])
    }

    /// `(index, attributes)` pairs in ascending index order.
    pub fn nodes(&self) -> impl Iterator<Item = (NodeIndex, &[f64])> + '_ {
        self.topology
            .indices
            .iter()
            .copied()
            .zip(self.attrs.chunks(self.arity))
    }

    /// Adds node `k` with the given attributes; its parent must be present.
    pub fn with_node(&self, k: NodeIndex, attrs: &[f64]) -> Result<AttributedTree> {
        if attrs.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: attrs.len(),
            });
        }
        if self.topology.contains(k) {
            return Err(Error::DuplicateNode(k));
        }
        let topology = self.topology.with_node(k)?;
        let pos = topology.position(k).expect("just inserted");
        let mut buf = self.attrs.clone();
        buf.splice(pos * self.arity..pos * self.arity, attrs.iter().copied());
        AttributedTree::new(topology, self.arity, buf)
    }

    /// Restriction to a topological subtree, keeping attributes.
    pub fn restrict(&self, sub: &TreeTopology) -> Result<AttributedTree> {
        let mut attrs = Vec::with_capacity(sub.len() * self.arity);
        for &k in sub.indices() {
            attrs.extend_from_slice(self.attrs_of(k).ok_or(Error::NotSubtree)?);
        }
        AttributedTree::new(sub.clone(), self.arity, attrs)
    }

    /// Topological subtree whose attributes match `other` within `tol` on every node.
    pub fn is_attribute_subtree_of(&self, other: &AttributedTree, tol: f64) -> bool {
        if self.arity != other.arity || !self.topology.is_subtree_of(&other.topology) {
            return false;
        }
        self.nodes().all(|(k, a)| {
            let b = other.attrs_of(k).expect("checked subtree");
            a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
        })
    }
}

pub fn is_topological_subtree(s: &TreeTopology, t: &TreeTopology) -> bool {
    s.is_subtree_of(t)
}

pub fn is_attribute_subtree(s: &AttributedTree, t: &AttributedTree, tol: f64) -> bool {
    s.is_attribute_subtree_of(t, tol)
}

pub fn union_tree(s: &TreeTopology, t: &TreeTopology) -> TreeTopology {
    s.union(t)
}

pub fn intersection_tree(s: &TreeTopology, t: &TreeTopology) -> TreeTopology {
    s.intersection(t)
}

/// A nonempty, ordered collection of attributed trees with shared arity.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSample {
    trees: Vec<AttributedTree>,
    ids: Vec<String>,
    arity: usize,
    level_cap: u32,
}

impl TreeSample {
    /// Sample with ids `"0"`, `"1"`, ... in input order.
    pub fn new(trees: Vec<AttributedTree>) -> Result<Self> {
        let ids = (0..trees.len()).map(|i| i.to_string()).collect();
        Self::with_ids(trees, ids)
    }

    pub fn with_ids(trees: Vec<AttributedTree>, ids: Vec<String>) -> Result<Self> {
        Self::with_ids_and_cap(trees, ids, DEFAULT_LEVEL_CAP)
    }

    pub fn with_ids_and_cap(
        trees: Vec<AttributedTree>,
        ids: Vec<String>,
        level_cap: u32,
    ) -> Result<Self> {
        let first = trees.first().ok_or(Error::EmptySample)?;
        let arity = first.arity();
        assert_eq!(trees.len(), ids.len(), "one id per tree");
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        for t in &trees {
            if t.arity() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: t.arity(),
                });
            }
            let level = t.topology().max_level();
            if level > level_cap {
                return Err(Error::LevelCapExceeded {
                    index: t.topology().max_index(),
                    level,
                    cap: level_cap,
                });
            }
        }
        Ok(TreeSample {
            trees,
            ids,
            arity,
            level_cap,
        })
    }

    pub fn trees(&self) -> &[AttributedTree] {
        &self.trees
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn level_cap(&self) -> u32 {
        self.level_cap
    }

    pub fn get(&self, id: &str) -> Option<&AttributedTree> {
        self.ids
            .iter()
            .position(|i| i == id)
            .map(|p| &self.trees[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AttributedTree)> + '_ {
        self.ids.iter().map(String::as_str).zip(&self.trees)
    }

    /// Union of every topology in the sample.
    pub fn support(&self) -> TreeTopology {
        support_tree(self)
    }
}

pub fn support_tree(sample: &TreeSample) -> TreeTopology {
    let mut trees = sample.trees().iter();
    let first = trees.next().expect("sample is nonempty").topology().clone();
    trees.fold(first, |acc, t| acc.union(t.topology()))
}
