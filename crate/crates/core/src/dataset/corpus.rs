//! JSON corpus format.
//!
//! ```json
//! {"arity": 2, "slots": ["x", "y"],
//!  "trees": [{"id": "a", "nodes": [{"k": 1, "a": [0.0, 1.5]}]}],
//!  "weights": {"scheme": "exponential"}}
//! ```
//!
//! Nodes are written in ascending index order and trees in sample order, so
//! serialization is canonical. Reals use shortest round-trip formatting.
//! Attributes of a node are stored only where the node exists; after
//! normalization an absent node therefore reads as "at the per-node mean".

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::metric::WeightKind;
use crate::tree::{
    left_child, right_child, AttributedTree, NodeIndex, TreeSample, DEFAULT_LEVEL_CAP,
};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("expected {expected} slot names, found {found}")]
    SlotCount { expected: usize, found: usize },
    #[error("tree {id:?} (entry {entry}): {source}")]
    Tree {
        id: String,
        entry: usize,
        #[source]
        source: Error,
    },
    #[error("invalid weights block: {0}")]
    Weights(#[source] Error),
    #[error("{0}")]
    Sample(#[source] Error),
}

impl CorpusError {
    /// The underlying tree error, if any.
    pub fn tree_error(&self) -> Option<&Error> {
        match self {
            CorpusError::Tree { source, .. }
            | CorpusError::Weights(source)
            | CorpusError::Sample(source) => Some(source),
            _ => None,
        }
    }
}

/// A parsed corpus: the sample plus slot names and an optional weight block.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub sample: TreeSample,
    pub slots: Vec<String>,
    pub weights: Option<WeightKind>,
}

impl Corpus {
    /// Corpus with generic slot names `a0`, `a1`, ...
    pub fn from_sample(sample: TreeSample) -> Self {
        let slots = (0..sample.arity()).map(|j| format!("a{j}")).collect();
        Corpus {
            sample,
            slots,
            weights: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParseOptions {
    /// Relabel every single child as a left child.
    pub canonicalize: bool,
    pub level_cap: u32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            canonicalize: false,
            level_cap: DEFAULT_LEVEL_CAP,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    arity: usize,
    slots: Vec<String>,
    trees: Vec<TreeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<WeightKind>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeRecord {
    id: String,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    k: NodeIndex,
    a: Vec<f64>,
}

pub fn parse_corpus(bytes: &[u8]) -> Result<Corpus, CorpusError> {
    parse_corpus_with(bytes, ParseOptions::default())
}

pub fn parse_corpus_with(bytes: &[u8], opts: ParseOptions) -> Result<Corpus, CorpusError> {
    let file: CorpusFile = serde_json::from_slice(bytes).map_err(|e| CorpusError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.slots.len() != file.arity {
        return Err(CorpusError::SlotCount {
            expected: file.arity,
            found: file.slots.len(),
        });
    }
    if file.arity == 0 {
        return Err(CorpusError::Sample(Error::ZeroArity));
    }
    let mut trees = Vec::with_capacity(file.trees.len());
    let mut ids = Vec::with_capacity(file.trees.len());
    let mut seen = HashSet::new();
    for (entry, rec) in file.trees.into_iter().enumerate() {
        let located = |source| CorpusError::Tree {
            id: rec.id.clone(),
            entry,
            source,
        };
        if !seen.insert(rec.id.clone()) {
            return Err(located(Error::DuplicateId(rec.id.clone())));
        }
        let nodes = rec.nodes.iter().map(|n| (n.k, n.a.clone()));
        let mut tree = AttributedTree::from_nodes_with_cap(file.arity, nodes, opts.level_cap)
            .map_err(located)?;
        if opts.canonicalize {
            tree = canonicalize(&tree);
        }
        trees.push(tree);
        ids.push(rec.id);
    }
    let sample =
        TreeSample::with_ids_and_cap(trees, ids, opts.level_cap).map_err(CorpusError::Sample)?;
    if let Some(WeightKind::Explicit { values }) = &file.weights {
        if let Some((k, v)) = values.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(CorpusError::Weights(Error::InvalidWeights(format!(
                "weight {v} at node {k} is not positive"
            ))));
        }
    }
    Ok(Corpus {
        sample,
        slots: file.slots,
        weights: file.weights,
    })
}

/// Canonical JSON text for a corpus.
pub fn serialize_corpus(corpus: &Corpus) -> String {
    let file = CorpusFile {
        arity: corpus.sample.arity(),
        slots: corpus.slots.clone(),
        trees: corpus
            .sample
            .iter()
            .map(|(id, t)| TreeRecord {
                id: id.to_string(),
                nodes: t
                    .nodes()
                    .map(|(k, a)| NodeRecord { k, a: a.to_vec() })
                    .collect(),
            })
            .collect(),
        weights: corpus.weights.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("corpus serializes");
    text.push('\n');
    text
}

/// Relabels every single child as the left child, recursively, carrying each
/// subtree along with its root.
pub fn canonicalize(t: &AttributedTree) -> AttributedTree {
    let mut out = Vec::with_capacity(t.topology().len());
    relabel(t, 1, 1, &mut out);
    AttributedTree::from_nodes(t.arity(), out).expect("relabelling preserves validity")
}

fn relabel(
    t: &AttributedTree,
    from: NodeIndex,
    to: NodeIndex,
    out: &mut Vec<(NodeIndex, Vec<f64>)>,
) {
    out.push((to, t.attrs_of(from).expect("node exists").to_vec()));
    let children: Vec<NodeIndex> = t.topology().children(from).collect();
    match children.as_slice() {
        [only] => relabel(t, *only, left_child(to), out),
        [l, r] => {
            relabel(t, *l, left_child(to), out);
            relabel(t, *r, right_child(to), out);
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_corpus() {
        let c = parse_corpus(
            br#"{"arity":1,"slots":["x"],"trees":[{"id":"t","nodes":[{"k":1,"a":[0.5]}]}]}"#,
        )
        .unwrap();
        assert_eq!(c.sample.len(), 1);
        assert_eq!(c.sample.get("t").unwrap().attrs_of(1), Some(&[0.5][..]));
        assert_eq!(c.weights, None);
    }

    #[test]
    fn orphan_is_located() {
        let text = br#"{"arity":1,"slots":["x"],"trees":[
            {"id":"ok","nodes":[{"k":1,"a":[0]}]},
            {"id":"bad","nodes":[{"k":1,"a":[0]},{"k":4,"a":[1]}]}]}"#;
        match parse_corpus(text) {
            Err(CorpusError::Tree { id, entry, source }) => {
                assert_eq!(id, "bad");
                assert_eq!(entry, 1);
                assert_eq!(
                    source,
                    Error::OrphanNode {
                        index: 4,
                        parent: 2
                    }
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        let no_root =
            br#"{"arity":1,"slots":["x"],"trees":[{"id":"a","nodes":[{"k":2,"a":[0]}]}]}"#;
        assert_eq!(
            parse_corpus(no_root).unwrap_err().tree_error(),
            Some(&Error::MissingRoot)
        );
        let arity =
            br#"{"arity":2,"slots":["x","y"],"trees":[{"id":"a","nodes":[{"k":1,"a":[0]}]}]}"#;
        assert_eq!(
            parse_corpus(arity).unwrap_err().tree_error(),
            Some(&Error::ArityMismatch {
                expected: 2,
                found: 1
            })
        );
        let dup = br#"{"arity":1,"slots":["x"],"trees":[{"id":"a","nodes":[{"k":1,"a":[0]}]},{"id":"a","nodes":[{"k":1,"a":[0]}]}]}"#;
        assert_eq!(
            parse_corpus(dup).unwrap_err().tree_error(),
            Some(&Error::DuplicateId("a".into()))
        );
        let empty = br#"{"arity":1,"slots":["x"],"trees":[]}"#;
        assert_eq!(
            parse_corpus(empty).unwrap_err().tree_error(),
            Some(&Error::EmptySample)
        );
        let slots = br#"{"arity":2,"slots":["x"],"trees":[]}"#;
        assert!(matches!(
            parse_corpus(slots),
            Err(CorpusError::SlotCount { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert!(matches!(
            parse_corpus(b""),
            Err(CorpusError::Syntax {
                line: 1,
                column: 0,
                ..
            })
        ));
        match parse_corpus(b"{\n  \"arity\": 1,\n  \"slots\": [\"x\"\n}") {
            Err(CorpusError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_corpus(br#"{"arity":1,"slots":["x"],"trees":[],"extra":1}"#),
            Err(CorpusError::Syntax { .. })
        ));
    }

    #[test]
    fn weights_block() {
        let text = br#"{"arity":1,"slots":["x"],"trees":[{"id":"a","nodes":[{"k":1,"a":[0]}]}],
            "weights":{"scheme":"explicit","values":{"1":0.5}}}"#;
        let c = parse_corpus(text).unwrap();
        match c.weights {
            Some(WeightKind::Explicit { values }) => assert_eq!(values[&1], 0.5),
            other => panic!("{other:?}"),
        }
        let bad = br#"{"arity":1,"slots":["x"],"trees":[{"id":"a","nodes":[{"k":1,"a":[0]}]}],
            "weights":{"scheme":"explicit","values":{"1":-0.5}}}"#;
        assert!(matches!(parse_corpus(bad), Err(CorpusError::Weights(_))));
    }

    #[test]
    fn serialization_is_exact_and_canonical() {
        let t = AttributedTree::from_nodes(
            2,
            [(3, vec![0.1 + 0.2, -1e-300]), (1, vec![1.0 / 3.0, 2.5e17])],
        )
        .unwrap();
        let mut c = Corpus::from_sample(TreeSample::new(vec![t]).unwrap());
        c.weights = Some(WeightKind::Equal);
        let text = serialize_corpus(&c);
        let back = parse_corpus(text.as_bytes()).unwrap();
        assert_eq!(back, c);
        assert_eq!(serialize_corpus(&back), text);
        assert!(text.find("\"k\": 1").unwrap() < text.find("\"k\": 3").unwrap());
    }

    #[test]
    fn canonicalize_moves_single_right_children() {
        let t = AttributedTree::from_nodes(
            1,
            [
                (1, vec![0.0]),
                (3, vec![3.0]),
                (7, vec![7.0]),
                (14, vec![14.0]),
                (15, vec![15.0]),
            ],
        )
        .unwrap();
        let c = canonicalize(&t);
        assert_eq!(c.topology().indices(), &[1, 2, 4, 8, 9]);
        assert_eq!(c.attrs_of(2), Some(&[3.0][..]));
        assert_eq!(c.attrs_of(8), Some(&[14.0][..]));
        assert_eq!(c.attrs_of(9), Some(&[15.0][..]));
        assert_eq!(canonicalize(&c), c);
    }
}
