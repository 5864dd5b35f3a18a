//! Tree metrics.
//!
//! `d_I` counts nodes present in exactly one of two trees. The attributed metric
//! adds a weighted Euclidean term over zero-padded attribute vectors:
//! `δ = d_I + f_δ`, and the variation function is `V_δ = d_I + f_δ²`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{level_of, AttributedTree, NodeIndex, TreeTopology};

/// Slack allowed when checking that explicit weights total at most one.
const TOTAL_SLACK: f64 = 1e-12;

/// How node weights are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum WeightKind {
    /// `2^-(2i+1)` on every node of level `i`.
    Exponential,
    /// `1 / |support|` on every support node.
    Equal,
    /// User-supplied weight per node index.
    Explicit {
        #[serde(deserialize_with = "node_keyed")]
        values: BTreeMap<NodeIndex, f64>,
    },
}

/// Map keys arrive as strings once the enum tag has been buffered.
fn node_keyed<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<NodeIndex, f64>, D::Error> {
    BTreeMap::<String, f64>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.parse()
                .map(|k| (k, v))
                .map_err(|_| serde::de::Error::custom(format!("invalid node index {k:?}")))
        })
        .collect()
}

/// Node weights materialized over a support topology.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightScheme {
    kind: WeightKind,
    support: TreeTopology,
    alphas: Vec<f64>,
    sqrt_alphas: Vec<f64>,
    total: f64,
}

pub fn exponential_weight(k: NodeIndex) -> f64 {
    0.5f64.powi(2 * level_of(k) as i32 + 1)
}

impl WeightScheme {
    pub fn materialize(kind: WeightKind, support: &TreeTopology) -> Result<Self> {
        let alphas: Vec<f64> = match &kind {
            WeightKind::Exponential => support
                .indices()
                .iter()
                .map(|&k| exponential_weight(k))
                .collect(),
            WeightKind::Equal => vec![1.0 / support.len() as f64; support.len()],
            WeightKind::Explicit { values } => support
                .indices()
                .iter()
                .map(|k| {
                    values.get(k).copied().ok_or_else(|| {
                        Error::InvalidWeights(format!("no weight given for node {k}"))
                    })
                })
                .collect::<Result<_>>()?,
        };
        for (&k, &a) in support.indices().iter().zip(&alphas) {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidWeights(format!(
                    "weight {a} at node {k} is not strictly positive"
                )));
            }
        }
        let total: f64 = alphas.iter().sum();
        if total > 1.0 + TOTAL_SLACK {
            return Err(Error::InvalidWeights(format!(
                "weights total {total}, which exceeds 1"
            )));
        }
        let sqrt_alphas = alphas.iter().map(|a| a.sqrt()).collect();
        Ok(WeightScheme {
            kind,
            support: support.clone(),
            alphas,
            sqrt_alphas,
            total,
        })
    }

    pub fn exponential(support: &TreeTopology) -> Self {
        Self::materialize(WeightKind::Exponential, support).expect("exponential weights are valid")
    }

    pub fn equal(support: &TreeTopology) -> Self {
        Self::materialize(WeightKind::Equal, support).expect("equal weights are valid")
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn support(&self) -> &TreeTopology {
        &self.support
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn alpha(&self, k: NodeIndex) -> Option<f64> {
        self.support.position(k).map(|p| self.alphas[p])
    }

    pub fn sqrt_alpha(&self, k: NodeIndex) -> Option<f64> {
        self.support.position(k).map(|p| self.sqrt_alphas[p])
    }

    pub(crate) fn require_alpha(&self, k: NodeIndex) -> Result<f64> {
        self.alpha(k).ok_or(Error::NotInSupport(k))
    }

    pub(crate) fn require_sqrt_alpha(&self, k: NodeIndex) -> Result<f64> {
        self.sqrt_alpha(k).ok_or(Error::NotInSupport(k))
    }
}

/// Weight-scaled, zero-padded attribute vector laid out in ascending
/// `(node, slot)` order over a support topology.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedVector {
    support: TreeTopology,
    arity: usize,
    entries: Vec<f64>,
}

impl PaddedVector {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn support(&self) -> &TreeTopology {
        &self.support
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Euclidean distance to another vector over the same layout.
    pub fn distance(&self, other: &PaddedVector) -> f64 {
        assert_eq!(self.entries.len(), other.entries.len());
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Embeds `t` into the weight scheme's support: entry `(k, j)` is
/// `sqrt(α_k) · attr(t, k, j)` when `k ∈ t`, zero otherwise.
pub fn pad_embed(t: &AttributedTree, w: &WeightScheme) -> Result<PaddedVector> {
    let p = t.arity();
    let support = w.support();
    let mut entries = vec![0.0; support.len() * p];
    for (k, a) in t.nodes() {
        let pos = support.position(k).ok_or(Error::NotInSupport(k))?;
        let sa = w.sqrt_alphas[pos];
        for (e, x) in entries[pos * p..(pos + 1) * p].iter_mut().zip(a) {
            *e = sa * x;
        }
    }
    Ok(PaddedVector {
        support: support.clone(),
        arity: p,
        entries,
    })
}

/// Size of the symmetric difference of the index sets.
pub fn integer_distance(s: &TreeTopology, t: &TreeTopology) -> usize {
    let (a, b) = (s.indices(), t.indices());
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

/// Squared fractional distance: the squared norm of the padded-vector
/// difference. Only nodes of `s ∪ t` carry nonzero entries, so the walk is
/// restricted to them, still in ascending `(node, slot)` order.
pub fn fractional_distance_sq(
    s: &AttributedTree,
    t: &AttributedTree,
    w: &WeightScheme,
) -> Result<f64> {
    if s.arity() != t.arity() {
        return Err(Error::ArityMismatch {
            expected: s.arity(),
            found: t.arity(),
        });
    }
    let mut sum = 0.0;
    let mut add = |k: NodeIndex, a: Option<&[f64]>, b: Option<&[f64]>| -> Result<()> {
        let sa = w.require_sqrt_alpha(k)?;
        match (a, b) {
            (Some(a), Some(b)) => {
                for (x, y) in a.iter().zip(b) {
                    let d = sa * x - sa * y;
                    sum += d * d;
                }
            }
            (Some(a), None) | (None, Some(a)) => {
                for x in a {
                    let d = sa * x;
                    sum += d * d;
                }
            }
            (None, None) => unreachable!(),
        }
        Ok(())
    };
    let mut sn = s.nodes().peekable();
    let mut tn = t.nodes().peekable();
    loop {
        match (sn.peek(), tn.peek()) {
            (Some(&(ks, a)), Some(&(kt, b))) => {
                if ks < kt {
                    add(ks, Some(a), None)?;
                    sn.next();
                } else if kt < ks {
                    add(kt, None, Some(b))?;
                    tn.next();
                } else {
                    add(ks, Some(a), Some(b))?;
                    sn.next();
                    tn.next();
                }
            }
            (Some(&(ks, a)), None) => {
                add(ks, Some(a), None)?;
                sn.next();
            }
            (None, Some(&(kt, b))) => {
                add(kt, None, Some(b))?;
                tn.next();
            }
            (None, None) => break,
        }
    }
    Ok(sum)
}

/// `f_δ(s, t)`.
pub fn fractional_distance(
    s: &AttributedTree,
    t: &AttributedTree,
    w: &WeightScheme,
) -> Result<f64> {
    fractional_distance_sq(s, t, w).map(f64::sqrt)
}

/// `δ(s, t) = d_I(s, t) + f_δ(s, t)`.
pub fn delta(s: &AttributedTree, t: &AttributedTree, w: &WeightScheme) -> Result<f64> {
    let f = fractional_distance(s, t, w)?;
    Ok(integer_distance(s.topology(), t.topology()) as f64 + f)
}

/// `V_δ(s, t) = d_I(s, t) + f_δ²(s, t)`.
pub fn variation(s: &AttributedTree, t: &AttributedTree, w: &WeightScheme) -> Result<f64> {
    let f2 = fractional_distance_sq(s, t, w)?;
    Ok(integer_distance(s.topology(), t.topology()) as f64 + f2)
}

/// Largest per-coordinate attribute magnitude that keeps `f_δ ≤ 1` for arity `p`.
pub fn attribute_bound(arity: usize) -> f64 {
    1.0 / (2.0 * (arity as f64).sqrt())
}
