//! Centerpoint trees.
//!
//! Median trees minimize `Σ_i d_I(t, t_i)`. They are characterized by the
//! majority rule: every node seen in more than half the sample is required,
//! nodes seen in exactly half are optional, everything else is excluded.
//! The median-mean tree pairs the fewest-node median topology with per-node
//! mean attributes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{fractional_distance_sq, integer_distance, WeightScheme};
use crate::tree::{AttributedTree, NodeIndex, TreeSample, TreeTopology};

/// Occurrence count of every support node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeCountTable {
    n: usize,
    support: TreeTopology,
    counts: Vec<usize>,
}

impl NodeCountTable {
    pub fn sample_size(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &TreeTopology {
        &self.support
    }

    /// Number of sample trees containing `k`; zero outside the support.
    pub fn count(&self, k: NodeIndex) -> usize {
        self.support.position(k).map_or(0, |p| self.counts[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeIndex, usize)> + '_ {
        self.support
            .indices()
            .iter()
            .copied()
            .zip(self.counts.iter().copied())
    }
}

pub fn node_counts(sample: &TreeSample) -> NodeCountTable {
    let support = sample.support();
    let mut counts = vec![0usize; support.len()];
    for t in sample.trees() {
        for &k in t.topology().indices() {
            counts[support.position(k).expect("support covers every tree")] += 1;
        }
    }
    NodeCountTable {
        n: sample.len(),
        support,
        counts,
    }
}

/// All median topologies of a sample: `required ∪ S` for every parent-closed
/// selection `S` of the optional nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MedianFamily {
    required: TreeTopology,
    optional: Vec<NodeIndex>,
}

impl MedianFamily {
    pub fn from_counts(counts: &NodeCountTable) -> Self {
        let n = counts.sample_size();
        let required = counts
            .iter()
            .filter(|&(_, c)| 2 * c > n)
            .map(|(k, _)| k)
            .collect();
        let optional = counts
            .iter()
            .filter(|&(_, c)| 2 * c == n)
            .map(|(k, _)| k)
            .collect();
        // a node seen in more than half the trees has a parent seen at least as often
        MedianFamily {
            required: TreeTopology::from_sorted_unchecked(required),
            optional,
        }
    }

    /// The fewest-node median.
    pub fn required(&self) -> &TreeTopology {
        &self.required
    }

    pub fn optional(&self) -> &[NodeIndex] {
        &self.optional
    }

    /// True iff `t` minimizes the summed integer distance to the sample.
    pub fn contains(&self, t: &TreeTopology) -> bool {
        self.required.is_subtree_of(t)
            && t.indices()
                .iter()
                .all(|k| self.required.contains(*k) || self.optional.binary_search(k).is_ok())
    }

    /// Every median topology, in lexicographic order of index sequences.
    pub fn medians(&self) -> Vec<TreeTopology> {
        let mut out = Vec::new();
        let mut current = self.required.clone();
        self.extend(0, &mut current, &mut out);
        out.sort();
        out
    }

    fn extend(&self, from: usize, current: &mut TreeTopology, out: &mut Vec<TreeTopology>) {
        out.push(current.clone());
        // ascending order guarantees a parent is decided before its children
        for i in from..self.optional.len() {
            let k = self.optional[i];
            if let Ok(next) = current.with_node(k) {
                let saved = std::mem::replace(current, next);
                self.extend(i + 1, current, out);
                *current = saved;
            }
        }
    }
}

pub fn median_family(sample: &TreeSample) -> MedianFamily {
    MedianFamily::from_counts(&node_counts(sample))
}

/// The unique fewest-node median topology.
pub fn minimal_median_tree(sample: &TreeSample) -> TreeTopology {
    median_family(sample).required
}

/// Per-node mean attributes on `topology`, averaging over the trees that
/// contain each node. Every node must appear somewhere in the sample.
///
/// Deviations are accumulated from the first occurrence of each node, so a
/// node carrying identical attributes in every tree gets them back exactly.
pub fn mean_tree(sample: &TreeSample, topology: &TreeTopology) -> Result<AttributedTree> {
    let p = sample.arity();
    let mut anchor: Vec<Option<&[f64]>> = vec![None; topology.len()];
    let mut offsets = vec![0.0; topology.len() * p];
    let mut counts = vec![0usize; topology.len()];
    for t in sample.trees() {
        for (k, a) in t.nodes() {
            if let Some(pos) = topology.position(k) {
                counts[pos] += 1;
                let base = *anchor[pos].get_or_insert(a);
                for ((acc, x), b) in offsets[pos * p..(pos + 1) * p].iter_mut().zip(a).zip(base) {
                    *acc += x - b;
                }
            }
        }
    }
    let mut attrs = Vec::with_capacity(topology.len() * p);
    for (pos, &c) in counts.iter().enumerate() {
        let base = anchor[pos].ok_or(Error::NotInSupport(topology.indices()[pos]))?;
        for (b, off) in base.iter().zip(&offsets[pos * p..(pos + 1) * p]) {
            attrs.push(b + off / c as f64);
        }
    }
    AttributedTree::new(topology.clone(), p, attrs)
}

/// Minimal median topology with per-node mean attributes.
pub fn median_mean_tree(sample: &TreeSample) -> AttributedTree {
    mean_tree(sample, &minimal_median_tree(sample)).expect("median nodes occur in the sample")
}

/// Support tree with per-node mean attributes.
pub fn average_support_tree(sample: &TreeSample) -> AttributedTree {
    mean_tree(sample, &sample.support()).expect("support nodes occur in the sample")
}

/// Sample variation about a center, split into its integer and fractional parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VariationParts {
    pub integer: usize,
    pub fractional: f64,
}

impl VariationParts {
    pub fn total(&self) -> f64 {
        self.integer as f64 + self.fractional
    }
}

/// `Σ_s V_δ(s, center)` over the sample, in sample order.
pub fn total_variation(
    sample: &TreeSample,
    center: &AttributedTree,
    w: &WeightScheme,
) -> Result<VariationParts> {
    let mut integer = 0;
    let mut fractional = 0.0;
    for t in sample.trees() {
        integer += integer_distance(t.topology(), center.topology());
        fractional += fractional_distance_sq(t, center, w)?;
    }
    Ok(VariationParts {
        integer,
        fractional,
    })
}
