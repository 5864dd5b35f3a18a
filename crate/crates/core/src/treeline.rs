//! Structure treelines, attribute treelines and the families they induce.
//!
//! A structure treeline `u_0 ⊂ u_1 ⊂ ... ⊂ u_m` grows one node at a time along
//! a descending chain `ν_1, ..., ν_m`. An attribute treeline keeps a topology
//! fixed and moves attributes along `v* + λ v`. A family attaches one
//! attribute treeline to every element of a structure treeline, with nested
//! direction subvectors cut from a single vector over the largest element.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::metric::{delta, WeightScheme};
use crate::tree::{left_child, parent_index, right_child, AttributedTree, NodeIndex, TreeTopology};

/// Nested trees `u_0 ⊂ ... ⊂ u_m`, each adding one node below the last.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTreeline {
    chain: Vec<NodeIndex>,
    elements: Vec<AttributedTree>,
}

impl StructureTreeline {
    /// Builds the treeline starting at `u0` and adding `chain` in order. Added
    /// nodes take their attributes from `source`.
    pub fn new(u0: AttributedTree, chain: Vec<NodeIndex>, source: &AttributedTree) -> Result<Self> {
        if let Some(&first) = chain.first() {
            if u0.topology().contains(first) {
                return Err(Error::InvalidTreeline(format!(
                    "first chain node {first} is already in u_0"
                )));
            }
            let parent = parent_index(first).map_err(|_| {
                Error::InvalidTreeline("the root cannot be added to a treeline".into())
            })?;
            if !u0.topology().contains(parent) {
                return Err(Error::InvalidTreeline(format!(
                    "parent {parent} of first chain node {first} is not in u_0"
                )));
            }
            if parent != 1 && u0.topology().children(parent).next().is_none() {
                return Err(Error::InvalidTreeline(format!(
                    "u_0 is not minimal: node {parent} could start the chain"
                )));
            }
        }
        for pair in chain.windows(2) {
            if pair[1] != left_child(pair[0]) && pair[1] != right_child(pair[0]) {
                return Err(Error::InvalidTreeline(format!(
                    "chain node {} is not a child of {}",
                    pair[1], pair[0]
                )));
            }
        }
        let mut elements = Vec::with_capacity(chain.len() + 1);
        elements.push(u0);
        for &k in &chain {
            let attrs = source.attrs_of(k).ok_or(Error::NotSubtree)?;
            let next = elements.last().expect("nonempty").with_node(k, attrs)?;
            elements.push(next);
        }
        Ok(StructureTreeline { chain, elements })
    }

    /// The one-element treeline `{u}`.
    pub fn degenerate(u: AttributedTree) -> Self {
        StructureTreeline {
            chain: Vec::new(),
            elements: vec![u],
        }
    }

    pub fn chain(&self) -> &[NodeIndex] {
        &self.chain
    }

    pub fn elements(&self) -> &[AttributedTree] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &AttributedTree {
        &self.elements[i]
    }

    pub fn start(&self) -> &AttributedTree {
        &self.elements[0]
    }

    pub fn last(&self) -> &AttributedTree {
        self.elements.last().expect("nonempty")
    }

    /// Number of elements, `m + 1`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of the element with the same topology as `t`, if any.
    pub fn position_of(&self, t: &TreeTopology) -> Option<usize> {
        self.elements.iter().position(|e| e.topology() == t)
    }
}

/// Every maximal structure treeline passing through `through` whose elements
/// are attribute subtrees of `within`, sorted by chain.
///
/// A treeline through `through` either removes a descending path ending at one
/// of its leaves (walking up while the parent is a non-root node with no other
/// child) and then keeps descending inside `within`, or leaves `through` as its
/// first element and grows from a node whose parent is the root or already has
/// a child.
pub fn enumerate_structure_treelines(
    through: &AttributedTree,
    within: &AttributedTree,
) -> Result<Vec<StructureTreeline>> {
    if !through.is_attribute_subtree_of(within, 0.0) {
        return Err(Error::NotSubtree);
    }
    let t = through.topology();
    let w = within.topology();
    let mut chains: BTreeSet<Vec<NodeIndex>> = BTreeSet::new();

    for leaf in t.leaves().filter(|&k| k != 1) {
        let mut back = vec![leaf];
        let mut node = leaf;
        loop {
            let parent = node / 2;
            let sibling = node ^ 1;
            if parent == 1 || t.contains(sibling) {
                break;
            }
            back.push(parent);
            node = parent;
        }
        back.reverse();
        descend(w, back, &mut chains);
    }

    for &k in w.indices() {
        if k == 1 || t.contains(k) {
            continue;
        }
        let parent = k / 2;
        if t.contains(parent) && (parent == 1 || !t.is_leaf(parent)) {
            descend(w, vec![k], &mut chains);
        }
    }

    if chains.is_empty() {
        return Ok(vec![StructureTreeline::degenerate(through.clone())]);
    }

    chains
        .into_iter()
        .map(|chain| {
            let u0_topology = TreeTopology::from_sorted_unchecked(
                t.indices()
                    .iter()
                    .copied()
                    .filter(|k| !chain.contains(k))
                    .collect(),
            );
            let u0 = through.restrict(&u0_topology)?;
            StructureTreeline::new(u0, chain, within)
        })
        .collect()
}

/// Extends `chain` down to every leaf of `within` below its last node.
fn descend(within: &TreeTopology, chain: Vec<NodeIndex>, out: &mut BTreeSet<Vec<NodeIndex>>) {
    let last = *chain.last().expect("nonempty chain");
    let children: Vec<NodeIndex> = within.children(last).collect();
    if children.is_empty() {
        out.insert(chain);
        return;
    }
    for c in children {
        let mut next = chain.clone();
        next.push(c);
        descend(within, next, out);
    }
}

/// The element of `l` closest to `t` under `δ`; ties go to the smallest index.
pub fn project_onto_structure_treeline<'a>(
    t: &AttributedTree,
    l: &'a StructureTreeline,
    w: &WeightScheme,
) -> Result<(usize, &'a AttributedTree)> {
    let mut best = (0, delta(t, l.element(0), w)?);
    for (i, u) in l.elements().iter().enumerate().skip(1) {
        let d = delta(t, u, w)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok((best.0, l.element(best.0)))
}

/// Trees sharing `base`'s topology with attribute vector `v* + λ v`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeTreeline {
    base: AttributedTree,
    direction: Vec<f64>,
}

impl AttributeTreeline {
    /// `direction` is node-major over `base`'s nodes and must be nonzero.
    pub fn new(base: AttributedTree, direction: Vec<f64>) -> Result<Self> {
        let expected = base.topology().len() * base.arity();
        if direction.len() != expected {
            return Err(Error::AttributeCount {
                expected,
                found: direction.len(),
            });
        }
        if direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTreeline("direction is not finite".into()));
        }
        if direction.iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroDirection);
        }
        Ok(AttributeTreeline { base, direction })
    }

    pub fn base(&self) -> &AttributedTree {
        &self.base
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    pub fn member(&self, lambda: f64) -> AttributedTree {
        let attrs = self
            .base
            .attribute_buffer()
            .iter()
            .zip(&self.direction)
            .map(|(b, v)| b + lambda * v)
            .collect();
        AttributedTree::new(self.base.topology().clone(), self.base.arity(), attrs)
            .expect("finite member")
    }
}

/// Closed-form minimizer of `f_δ²(t, base + λ v)` over `λ`: the weighted
/// regression of `t`'s zero-padded residual from `base` onto `v`, restricted
/// to `base`'s nodes. `None` when `v` has zero weighted norm.
pub(crate) fn regression_coefficient(
    t: &AttributedTree,
    base: &AttributedTree,
    direction: &[f64],
    w: &WeightScheme,
) -> Result<Option<f64>> {
    let p = base.arity();
    if t.arity() != p {
        return Err(Error::ArityMismatch {
            expected: p,
            found: t.arity(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((k, b), v) in base.nodes().zip(direction.chunks(p)) {
        let alpha = w.require_alpha(k)?;
        let x = t.attrs_of(k);
        for j in 0..p {
            let xj = x.map_or(0.0, |x| x[j]);
            num += alpha * (xj - b[j]) * v[j];
            den += alpha * v[j] * v[j];
        }
    }
    Ok((den > 0.0).then(|| num / den))
}

/// Projection onto an attribute treeline: `(λ*, member at λ*)`.
pub fn project_onto_attribute_treeline(
    t: &AttributedTree,
    e: &AttributeTreeline,
    w: &WeightScheme,
) -> Result<(f64, AttributedTree)> {
    let lambda =
        regression_coefficient(t, &e.base, &e.direction, w)?.ok_or(Error::ZeroDirection)?;
    Ok((lambda, e.member(lambda)))
}

/// A structure treeline plus a direction vector over its largest element.
#[derive(Clone, Debug, PartialEq)]
pub struct TreelineFamily {
    structure: StructureTreeline,
    direction: Vec<f64>,
}

impl TreelineFamily {
    pub fn new(structure: StructureTreeline, direction: Vec<f64>) -> Result<Self> {
        let last = structure.last();
        let expected = last.topology().len() * last.arity();
        if direction.len() != expected {
            return Err(Error::AttributeCount {
                expected,
                found: direction.len(),
            });
        }
        Ok(TreelineFamily {
            structure,
            direction,
        })
    }

    pub fn structure(&self) -> &StructureTreeline {
        &self.structure
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// The attribute subvector of the direction on element `i`'s nodes.
    pub fn direction_for(&self, i: usize) -> Vec<f64> {
        let full = self.structure.last().topology();
        let p = self.structure.last().arity();
        let mut out = Vec::with_capacity(self.structure.element(i).topology().len() * p);
        for &k in self.structure.element(i).topology().indices() {
            let pos = full.position(k).expect("elements are nested");
            out.extend_from_slice(&self.direction[pos * p..(pos + 1) * p]);
        }
        out
    }

    /// Member of `e_i` at `λ`; equals element `i` when its direction is zero.
    pub fn line_member(&self, i: usize, lambda: f64) -> AttributedTree {
        let u = self.structure.element(i);
        let attrs = u
            .attribute_buffer()
            .iter()
            .zip(self.direction_for(i))
            .map(|(b, v)| b + lambda * v)
            .collect();
        AttributedTree::new(u.topology().clone(), u.arity(), attrs).expect("finite member")
    }

    /// The attribute treeline `e_i` of the family.
    pub fn line(&self, i: usize) -> Result<AttributeTreeline> {
        AttributeTreeline::new(self.structure.element(i).clone(), self.direction_for(i))
    }
}

/// Two-stage projection onto a family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyProjection {
    pub element: usize,
    pub lambda: f64,
    pub tree: AttributedTree,
}

pub fn project_onto_family(
    t: &AttributedTree,
    fam: &TreelineFamily,
    w: &WeightScheme,
) -> Result<FamilyProjection> {
    let (element, _) = project_onto_structure_treeline(t, fam.structure(), w)?;
    let line = fam.line(element)?;
    let (lambda, tree) = project_onto_attribute_treeline(t, &line, w)?;
    Ok(FamilyProjection {
        element,
        lambda,
        tree,
    })
}
