use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use treeoda::center::{average_support_tree, median_family, median_mean_tree, total_variation};
use treeoda::dataset::{
    denormalize, generate_synthetic, normalize, parse_corpus_with, serialize_corpus, Corpus,
    NormalizationRecord, ParseOptions, SynthSpec,
};
use treeoda::metric::{
    delta, fractional_distance, integer_distance, variation, WeightKind, WeightScheme,
};
use treeoda::principal::{analyze as run_analysis, projection_coefficients, AlsOptions};
use treeoda::{AttributedTree, TreeSample};

use crate::output::{emit, tree_json, write_text};
use crate::{AnalysisArgs, OutputArgs, WeightArg};

pub enum Status {
    Done,
    NotConverged,
}

fn load(path: &Path, canonicalize: bool) -> Result<Corpus> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let opts = ParseOptions {
        canonicalize,
        ..ParseOptions::default()
    };
    parse_corpus_with(&bytes, opts).with_context(|| format!("parsing {}", path.display()))
}

/// The analysis sample, its weights and the normalization record if any.
struct Prepared {
    sample: TreeSample,
    weights: WeightScheme,
    record: Option<NormalizationRecord>,
}

fn prepare(corpus: Corpus, args: &AnalysisArgs, normalize_default: bool) -> Result<Prepared> {
    let kind = match args.weights {
        Some(WeightArg::Exponential) => WeightKind::Exponential,
        Some(WeightArg::Equal) => WeightKind::Equal,
        Some(WeightArg::File) => corpus
            .weights
            .clone()
            .ok_or_else(|| anyhow!("--weights file given but the corpus has no weights block"))?,
        None => corpus.weights.clone().unwrap_or(WeightKind::Exponential),
    };
    let weights = WeightScheme::materialize(kind, &corpus.sample.support()).context("weights")?;
    let (sample, record) = if args.normalize_or(normalize_default) {
        let (s, r) = normalize(&corpus.sample);
        (s, Some(r))
    } else {
        (corpus.sample, None)
    };
    Ok(Prepared {
        sample,
        weights,
        record,
    })
}

fn original(t: &AttributedTree, record: &Option<NormalizationRecord>) -> Result<Value> {
    Ok(match record {
        Some(r) => tree_json(&denormalize(t, r)?),
        None => tree_json(t),
    })
}

pub fn validate(path: &Path, canonicalize: bool, io: &OutputArgs) -> Result<Status> {
    let corpus = load(path, canonicalize)?;
    let trees: Vec<Value> = corpus
        .sample
        .iter()
        .map(|(id, t)| {
            json!({
                "id": id,
                "nodes": t.topology().len(),
                "levels": t.topology().levels(),
                "leaves": t.topology().leaves().count(),
            })
        })
        .collect();
    let doc = json!({
        "valid": true,
        "arity": corpus.sample.arity(),
        "slots": corpus.slots,
        "trees": trees,
        "support_nodes": corpus.sample.support().len(),
        "weights": corpus.weights,
    });
    emit(&doc, io)?;
    Ok(Status::Done)
}

pub fn center(path: &Path, args: &AnalysisArgs, io: &OutputArgs) -> Result<Status> {
    let p = prepare(load(path, false)?, args, false)?;
    let family = median_family(&p.sample);
    let minimal = family.required().clone();
    let medians: Vec<Value> = family
        .medians()
        .iter()
        .map(|m| json!({"nodes": m, "minimal": *m == minimal}))
        .collect();
    let mm = median_mean_tree(&p.sample);
    let avg = average_support_tree(&p.sample);
    let tv = total_variation(&p.sample, &mm, &p.weights)?;
    let doc = json!({
        "normalized": p.record.is_some(),
        "weights": p.weights.kind(),
        "median_family": {
            "required": family.required(),
            "optional": family.optional(),
            "medians": medians,
        },
        "minimal_median": minimal,
        "median_mean": tree_json(&mm),
        "median_mean_original": original(&mm, &p.record)?,
        "average_support": tree_json(&avg),
        "average_support_original": original(&avg, &p.record)?,
        "total_variation": {"integer": tv.integer, "fractional": tv.fractional, "total": tv.total()},
    });
    emit(&doc, io)?;
    Ok(Status::Done)
}

pub fn analyze(
    path: &Path,
    args: &AnalysisArgs,
    io: &OutputArgs,
    max_iter: usize,
    tol: f64,
) -> Result<Status> {
    if !(tol.is_finite() && tol >= 0.0) {
        bail!("--tol must be finite and non-negative");
    }
    let p = prepare(load(path, false)?, args, true)?;
    let opts = AlsOptions { max_iter, tol };
    let a = run_analysis(&p.sample, &p.weights, opts)?;
    let s = &a.structure;
    let projections: Vec<Value> = p
        .sample
        .ids()
        .iter()
        .zip(&s.projections)
        .map(|(id, e)| json!({"id": id, "element": e}))
        .collect();
    let elements: Vec<Value> = s
        .treeline
        .elements()
        .iter()
        .map(|e| e.topology().indices().to_vec().into())
        .collect();
    let mut status = Status::Done;
    let attribute = match &a.attribute {
        None => Value::Null,
        Some(pa) => {
            if !pa.converged {
                status = Status::NotConverged;
            }
            let nodes = s.treeline.last().topology().indices();
            let direction_original = match &p.record {
                Some(r) => r.denormalize_direction(nodes, pa.direction())?,
                None => pa.direction().to_vec(),
            };
            let coefficients = projection_coefficients(&p.sample, &pa.family, &p.weights)?;
            json!({
                "nodes": nodes,
                "direction": pa.direction(),
                "direction_original": direction_original,
                "coefficients": coefficients,
                "residual": pa.residual,
                "converged": pa.converged,
                "iterations": pa.iterations,
                "trace": pa.trace,
                "frozen_slots": pa.frozen_slots,
            })
        }
    };
    let doc = json!({
        "normalized": p.record.is_some(),
        "weights": p.weights.kind(),
        "options": opts,
        "center": tree_json(&s.center),
        "center_original": original(&s.center, &p.record)?,
        "structure": {
            "chain": s.treeline.chain(),
            "elements": elements,
            "center_position": s.center_position,
            "residual": s.residual,
            "explained": s.explained,
            "candidates": s.candidates,
            "projections": projections,
        },
        "attribute": attribute,
        "report": a.report,
    });
    emit(&doc, io)?;
    Ok(status)
}

pub fn distance(
    path: &Path,
    first: &str,
    second: &str,
    args: &AnalysisArgs,
    io: &OutputArgs,
) -> Result<Status> {
    let p = prepare(load(path, false)?, args, false)?;
    let get = |id: &str| {
        p.sample
            .get(id)
            .ok_or_else(|| anyhow!("UnknownId: no tree with id {id:?}"))
    };
    let (s, t) = (get(first)?, get(second)?);
    let doc = json!({
        "first": first,
        "second": second,
        "normalized": p.record.is_some(),
        "weights": p.weights.kind(),
        "d_i": integer_distance(s.topology(), t.topology()),
        "f_delta": fractional_distance(s, t, &p.weights)?,
        "delta": delta(s, t, &p.weights)?,
        "variation": variation(s, t, &p.weights)?,
    });
    emit(&doc, io)?;
    Ok(Status::Done)
}

pub fn synth(spec: &SynthSpec, out: Option<&Path>, meta: Option<&Path>) -> Result<Status> {
    let (corpus, planted) = generate_synthetic(spec)?;
    write_text(&serialize_corpus(&corpus), out)?;
    let meta_path = meta.map(Path::to_path_buf).or_else(|| {
        out.map(|o| {
            let mut name = o.file_stem().unwrap_or_default().to_os_string();
            name.push(".meta.json");
            o.with_file_name(name)
        })
    });
    if let Some(path) = meta_path {
        let mut text = serde_json::to_string_pretty(&planted)?;
        text.push('\n');
        write_text(&text, Some(&path as &PathBuf))?;
    }
    Ok(Status::Done)
}
