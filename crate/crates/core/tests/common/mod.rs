#![allow(dead_code)]

use rand::Rng;
use treeoda::{AttributedTree, NodeIndex, TreeSample, TreeTopology};

/// Random topology of `1..=max_nodes` nodes grown at random frontier slots
/// no deeper than `level_cap`.
pub fn random_topology(rng: &mut impl Rng, max_nodes: usize, level_cap: u32) -> TreeTopology {
    let target = rng.random_range(1..=max_nodes);
    let mut nodes = vec![1u32];
    while nodes.len() < target {
        let frontier: Vec<NodeIndex> = nodes
            .iter()
            .flat_map(|&k| [2 * k, 2 * k + 1])
            .filter(|c| !nodes.contains(c) && (31 - c.leading_zeros()) <= level_cap)
            .collect();
        if frontier.is_empty() {
            break;
        }
        nodes.push(frontier[rng.random_range(0..frontier.len())]);
    }
    TreeTopology::new(nodes).unwrap()
}

/// Random parent-closed subset of `base`, keeping each eligible node with
/// probability `keep`.
pub fn random_subtree(rng: &mut impl Rng, base: &TreeTopology, keep: f64) -> TreeTopology {
    let mut out = vec![1u32];
    for &k in &base.indices()[1..] {
        if out.contains(&(k / 2)) && rng.random_bool(keep) {
            out.push(k);
        }
    }
    TreeTopology::new(out).unwrap()
}

pub fn random_attributed(
    rng: &mut impl Rng,
    t: &TreeTopology,
    arity: usize,
    bound: f64,
) -> AttributedTree {
    let attrs = (0..t.len() * arity)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    AttributedTree::new(t.clone(), arity, attrs).unwrap()
}

pub fn random_tree(
    rng: &mut impl Rng,
    max_nodes: usize,
    level_cap: u32,
    arity: usize,
    bound: f64,
) -> AttributedTree {
    let t = random_topology(rng, max_nodes, level_cap);
    random_attributed(rng, &t, arity, bound)
}

/// `n` random attributed subtrees of `base`.
pub fn random_sample(
    rng: &mut impl Rng,
    base: &TreeTopology,
    n: usize,
    arity: usize,
    bound: f64,
) -> TreeSample {
    let trees = (0..n)
        .map(|_| {
            let keep = rng.random_range(0.3..0.95);
            let t = random_subtree(rng, base, keep);
            random_attributed(rng, &t, arity, bound)
        })
        .collect();
    TreeSample::new(trees).unwrap()
}

pub fn level(k: NodeIndex) -> u32 {
    31 - k.leading_zeros()
}

/// Every parent-closed subset of `support` containing the root.
pub fn all_subtrees(support: &TreeTopology) -> Vec<TreeTopology> {
    let ix = support.indices();
    assert!(ix.len() <= 20);
    let parent_pos: Vec<Option<usize>> = ix
        .iter()
        .map(|&k| (k > 1).then(|| ix.iter().position(|&p| p == k / 2).unwrap()))
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << ix.len()) {
        if mask & 1 == 0 {
            continue;
        }
        let closed = (1..ix.len())
            .all(|i| mask & (1 << i) == 0 || mask & (1 << parent_pos[i].unwrap()) != 0);
        if closed {
            let nodes = (0..ix.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ix[i]);
            out.push(TreeTopology::new(nodes).unwrap());
        }
    }
    out
}
