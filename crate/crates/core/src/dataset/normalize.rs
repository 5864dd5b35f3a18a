//! Per-node centering and scaling into the attribute bound.
//!
//! Each slot of each node is centered at its mean over the trees containing
//! the node and scaled so the largest centered magnitude equals
//! `b = 1/(2√p)`. Slots that are constant get scale 1.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::attribute_bound;
use crate::tree::{AttributedTree, NodeIndex, TreeSample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlotScale {
    pub center: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizationRecord {
    arity: usize,
    bound: f64,
    nodes: BTreeMap<NodeIndex, Vec<SlotScale>>,
}

impl NormalizationRecord {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn slots(&self, k: NodeIndex) -> Option<&[SlotScale]> {
        self.nodes.get(&k).map(Vec::as_slice)
    }

    fn require(&self, k: NodeIndex) -> Result<&[SlotScale]> {
        self.slots(k).ok_or(Error::UnknownNode(k))
    }

    /// Original-scale value of slot `j` at node `k`.
    pub fn denormalize_value(&self, k: NodeIndex, j: usize, y: f64) -> Result<f64> {
        let s = self.require(k)?[j];
        Ok(y / s.scale + s.center)
    }

    /// Original-scale direction for node-major vector `v` over `nodes`. A
    /// member `v* + λ v` maps to `denormalize(v*) + λ · (v / scale)`.
    pub fn denormalize_direction(&self, nodes: &[NodeIndex], v: &[f64]) -> Result<Vec<f64>> {
        let p = self.arity;
        assert_eq!(v.len(), nodes.len() * p, "direction length");
        let mut out = Vec::with_capacity(v.len());
        for (&k, block) in nodes.iter().zip(v.chunks(p)) {
            for (x, s) in block.iter().zip(self.require(k)?) {
                out.push(x / s.scale);
            }
        }
        Ok(out)
    }
}

pub fn normalize(sample: &TreeSample) -> (TreeSample, NormalizationRecord) {
    let p = sample.arity();
    let bound = attribute_bound(p);
    let support = sample.support();
    // Mean as first value plus mean deviation, so constant slots center exactly.
    let mut first: BTreeMap<NodeIndex, &[f64]> = BTreeMap::new();
    let mut sums: BTreeMap<NodeIndex, (usize, Vec<f64>)> = BTreeMap::new();
    for t in sample.trees() {
        for (k, a) in t.nodes() {
            let base = *first.entry(k).or_insert(a);
            let (n, acc) = sums.entry(k).or_insert_with(|| (0, vec![0.0; p]));
            *n += 1;
            for ((s, x), b) in acc.iter_mut().zip(a).zip(base) {
                *s += x - b;
            }
        }
    }
    let centers: BTreeMap<NodeIndex, Vec<f64>> = support
        .indices()
        .iter()
        .map(|&k| {
            let (n, acc) = &sums[&k];
            let c = first[&k]
                .iter()
                .zip(acc)
                .map(|(b, s)| b + s / *n as f64)
                .collect();
            (k, c)
        })
        .collect();
    let mut spread: BTreeMap<NodeIndex, Vec<f64>> = support
        .indices()
        .iter()
        .map(|&k| (k, vec![0.0; p]))
        .collect();
    for t in sample.trees() {
        for (k, a) in t.nodes() {
            let m = spread.get_mut(&k).expect("support node");
            for ((m, x), c) in m.iter_mut().zip(a).zip(&centers[&k]) {
                *m = m.max((x - c).abs());
            }
        }
    }
    let nodes: BTreeMap<NodeIndex, Vec<SlotScale>> = centers
        .iter()
        .map(|(&k, c)| {
            let scales = c
                .iter()
                .zip(&spread[&k])
                .map(|(&center, &m)| SlotScale {
                    center,
                    scale: if m > 0.0 { bound / m } else { 1.0 },
                })
                .collect();
            (k, scales)
        })
        .collect();
    let record = NormalizationRecord {
        arity: p,
        bound,
        nodes,
    };
    let trees = sample
        .trees()
        .iter()
        .map(|t| {
            let attrs = t
                .nodes()
                .flat_map(|(k, a)| {
                    let slots = &record.nodes[&k];
                    a.iter()
                        .zip(slots)
                        .map(|(x, s)| ((x - s.center) * s.scale).clamp(-bound, bound))
                        .collect::<Vec<_>>()
                })
                .collect();
            AttributedTree::new(t.topology().clone(), p, attrs).expect("same shape")
        })
        .collect();
    let normalized = TreeSample::with_ids_and_cap(trees, sample.ids().to_vec(), sample.level_cap())
        .expect("same ids and shapes");
    (normalized, record)
}

/// Inverse of the normalization map on every node of `t`.
pub fn denormalize(t: &AttributedTree, record: &NormalizationRecord) -> Result<AttributedTree> {
    let mut attrs = Vec::with_capacity(t.attribute_buffer().len());
    for (k, a) in t.nodes() {
        for (y, s) in a.iter().zip(record.require(k)?) {
            attrs.push(y / s.scale + s.center);
        }
    }
    AttributedTree::new(t.topology().clone(), t.arity(), attrs)
}

pub fn denormalize_sample(sample: &TreeSample, record: &NormalizationRecord) -> Result<TreeSample> {
    let trees = sample
        .trees()
        .iter()
        .map(|t| denormalize(t, record))
        .collect::<Result<Vec<_>>>()?;
    TreeSample::with_ids_and_cap(trees, sample.ids().to_vec(), sample.level_cap())
}
