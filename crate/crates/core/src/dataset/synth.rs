//! Synthetic corpora with planted structure.
//!
//! Every tree carries six slots. The root stores a start point and an end
//! point; other nodes store a connectivity parameter in `start_x`, leave
//! `start_y` and `start_z` at zero, and store their end point in the `end_*`
//! slots. Attributes follow `x = base + z·d + noise` with one planted
//! direction `d`. On the root `d = (−e, +e)`, so flipping the sign of `z`
//! swaps the start and end points.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tree::{left_child, level_of, AttributedTree, NodeIndex, TreeSample, TreeTopology};

pub const SLOTS: [&str; 6] = ["start_x", "start_y", "start_z", "end_x", "end_y", "end_z"];
const ARITY: usize = SLOTS.len();

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plan", rename_all = "snake_case")]
pub enum TopologyPlan {
    /// Tree `i` holds the left chain `1, 2, 4, ...` of length `1 + (i mod depth)`
    /// below the root; every third tree also holds node 3.
    LeftChain { depth: u32 },
    /// Every tree has the same topology.
    Fixed { nodes: Vec<NodeIndex> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub plan: TopologyPlan,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    /// Fraction of trees with a negative score, rounded to the nearest count.
    pub flip_fraction: f64,
    /// Relative spread of score magnitudes around 1.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 12,
            plan: TopologyPlan::Fixed {
                nodes: vec![1, 2, 3],
            },
            noise: 0.01,
            flip_fraction: 0.5,
            jitter: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.flip_fraction) {
            return bad("flip fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return bad("jitter must lie in [0, 1)");
        }
        match &self.plan {
            TopologyPlan::LeftChain { depth } if *depth == 0 || *depth > 15 => {
                bad("left-chain depth must lie in 1..=15")
            }
            TopologyPlan::Fixed { nodes } => TreeTopology::new(nodes.iter().copied())
                .map(|_| ())
                .map_err(|e| Error::InvalidSpec(format!("fixed topology: {e}"))),
            _ => Ok(()),
        }
    }
}

/// Ground truth recorded by the generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlantedMeta {
    pub spec: SynthSpec,
    /// `+1` or `−1` per tree, in sample order.
    pub signs: Vec<i8>,
    /// Planted score `z` per tree.
    pub scores: Vec<f64>,
    /// Ids with positive and with negative sign.
    pub groups: [Vec<String>; 2],
    /// Nodes the planted direction is listed over.
    pub direction_nodes: Vec<NodeIndex>,
    /// Node-major planted direction over `direction_nodes`.
    pub direction: Vec<f64>,
    /// Left chain below the root, for the left-chain plan.
    pub chain: Option<Vec<NodeIndex>>,
}

fn base_attrs(k: NodeIndex) -> [f64; ARITY] {
    if k == 1 {
        return [0.0; ARITY];
    }
    let level = level_of(k) as f64;
    let side = if k.is_multiple_of(2) { -1.0 } else { 1.0 };
    [0.5, 0.0, 0.0, 1.0 + level, side * level, 0.25 * level]
}

fn direction_attrs(k: NodeIndex) -> [f64; ARITY] {
    let e = [1.0, 0.5, 0.25];
    if k == 1 {
        [-e[0], -e[1], -e[2], e[0], e[1], e[2]]
    } else {
        [0.0, 0.0, 0.0, 0.5 * e[0], 0.5 * e[1], 0.5 * e[2]]
    }
}

fn topology_for(plan: &TopologyPlan, i: usize) -> TreeTopology {
    match plan {
        TopologyPlan::LeftChain { depth } => {
            let len = 1 + (i as u32 % depth);
            let mut nodes = vec![1];
            let mut k = 1;
            for _ in 0..len {
                k = left_child(k);
                nodes.push(k);
            }
            if i.is_multiple_of(3) {
                nodes.push(3);
            }
            TreeTopology::new(nodes).expect("chain is parent-closed")
        }
        TopologyPlan::Fixed { nodes } => {
            TreeTopology::new(nodes.iter().copied()).expect("validated")
        }
    }
}

/// Deterministic corpus and ground truth for `spec`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Corpus, PlantedMeta)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidSpec(e.to_string()))?;

    let flipped = (spec.flip_fraction * spec.n as f64).round() as usize;
    let mut signs: Vec<i8> = (0..spec.n)
        .map(|i| if i < flipped { -1 } else { 1 })
        .collect();
    signs.shuffle(&mut rng);

    let mut trees = Vec::with_capacity(spec.n);
    let mut scores = Vec::with_capacity(spec.n);
    for (i, &sign) in signs.iter().enumerate() {
        let z = sign as f64 * (1.0 + spec.jitter * rng.random_range(-1.0..=1.0));
        let topology = topology_for(&spec.plan, i);
        let mut attrs = Vec::with_capacity(topology.len() * ARITY);
        for &k in topology.indices() {
            let (b, d) = (base_attrs(k), direction_attrs(k));
            for j in 0..ARITY {
                let unused = k != 1 && (j == 1 || j == 2);
                attrs.push(if unused {
                    0.0
                } else {
                    b[j] + z * d[j] + noise.sample(&mut rng)
                });
            }
        }
        trees.push(AttributedTree::new(topology, ARITY, attrs)?);
        scores.push(z);
    }
    let sample = TreeSample::new(trees)?;
    let support = sample.support();
    let direction = support
        .indices()
        .iter()
        .flat_map(|&k| direction_attrs(k))
        .collect();
    let mut groups = [Vec::new(), Vec::new()];
    for (id, &s) in sample.ids().iter().zip(&signs) {
        groups[usize::from(s < 0)].push(id.clone());
    }
    let chain = match spec.plan {
        TopologyPlan::LeftChain { depth } => Some((1..=depth).map(|i| 1 << i).collect()),
        TopologyPlan::Fixed { .. } => None,
    };
    let meta = PlantedMeta {
        spec: spec.clone(),
        signs,
        scores,
        groups,
        direction_nodes: support.indices().to_vec(),
        direction,
        chain,
    };
    let corpus = Corpus {
        sample,
        slots: SLOTS.iter().map(|s| s.to_string()).collect(),
        weights: None,
    };
    Ok((corpus, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::corpus::serialize_corpus;

    #[test]
    fn deterministic_given_seed() {
        let spec = SynthSpec {
            seed: 42,
            ..SynthSpec::default()
        };
        let (a, ma) = generate_synthetic(&spec).unwrap();
        let (b, mb) = generate_synthetic(&spec).unwrap();
        assert_eq!(serialize_corpus(&a), serialize_corpus(&b));
        assert_eq!(ma, mb);
        let (c, _) = generate_synthetic(&SynthSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(serialize_corpus(&a), serialize_corpus(&c));
    }

    #[test]
    fn flip_counts() {
        let (_, meta) = generate_synthetic(&SynthSpec::default()).unwrap();
        assert_eq!(meta.groups[0].len(), 6);
        assert_eq!(meta.groups[1].len(), 6);
        let (_, meta) = generate_synthetic(&SynthSpec {
            flip_fraction: 0.0,
            ..SynthSpec::default()
        })
        .unwrap();
        assert!(meta.signs.iter().all(|&s| s == 1));
        assert!(meta.groups[1].is_empty());
    }

    #[test]
    fn flipped_root_swaps_endpoints() {
        let (c, meta) = generate_synthetic(&SynthSpec {
            noise: 0.0,
            jitter: 0.0,
            ..SynthSpec::default()
        })
        .unwrap();
        let pos = meta.signs.iter().position(|&s| s == 1).unwrap();
        let neg = meta.signs.iter().position(|&s| s == -1).unwrap();
        let a = c.sample.trees()[pos].attrs_of(1).unwrap();
        let b = c.sample.trees()[neg].attrs_of(1).unwrap();
        assert_eq!(&a[..3], &b[3..]);
        assert_eq!(&a[3..], &b[..3]);
    }

    #[test]
    fn left_chain_plan() {
        let (c, meta) = generate_synthetic(&SynthSpec {
            n: 6,
            plan: TopologyPlan::LeftChain { depth: 3 },
            ..SynthSpec::default()
        })
        .unwrap();
        let tops: Vec<_> = c
            .sample
            .trees()
            .iter()
            .map(|t| t.topology().indices().to_vec())
            .collect();
        assert_eq!(tops[0], vec![1, 2, 3]);
        assert_eq!(tops[1], vec![1, 2, 4]);
        assert_eq!(tops[2], vec![1, 2, 4, 8]);
        assert_eq!(tops[3], vec![1, 2, 3]);
        assert_eq!(meta.chain, Some(vec![2, 4, 8]));
        for t in c.sample.trees() {
            for (k, a) in t.nodes().filter(|(k, _)| *k != 1) {
                assert_eq!((a[1], a[2]), (0.0, 0.0), "unused slots at node {k}");
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let base = SynthSpec::default();
        for spec in [
            SynthSpec {
                n: 0,
                ..base.clone()
            },
            SynthSpec {
                noise: -1.0,
                ..base.clone()
            },
            SynthSpec {
                flip_fraction: 1.5,
                ..base.clone()
            },
            SynthSpec {
                jitter: 1.0,
                ..base.clone()
            },
            SynthSpec {
                plan: TopologyPlan::LeftChain { depth: 0 },
                ..base.clone()
            },
            SynthSpec {
                plan: TopologyPlan::Fixed { nodes: vec![1, 4] },
                ..base.clone()
            },
        ] {
            assert!(
                matches!(generate_synthetic(&spec), Err(Error::InvalidSpec(_))),
                "{spec:?}"
            );
        }
    }
}
