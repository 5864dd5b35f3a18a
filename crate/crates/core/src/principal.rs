//! Principal structure treeline, principal attribute direction and the
//! variation decomposition built on them.

use serde::Serialize;

use crate::center::{average_support_tree, median_mean_tree, total_variation};
use crate::error::{Error, Result};
use crate::metric::{integer_distance, variation, WeightScheme};
use crate::tree::{AttributedTree, TreeSample};
use crate::treeline::{
    enumerate_structure_treelines, project_onto_structure_treeline, regression_coefficient,
    StructureTreeline, TreelineFamily,
};

/// Projection sums of one structure treeline over a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureFit {
    /// `Σ V_δ(t, P_l(t))`.
    pub residual: f64,
    /// `Σ V_δ(u, P_l(t))` for the reference element `u`.
    pub explained: f64,
    /// Element index of each tree's projection, in sample order.
    pub projections: Vec<usize>,
}

/// Projects every tree onto `l` and sums variations, measuring the explained
/// part against element `reference`.
pub fn structure_fit(
    sample: &TreeSample,
    l: &StructureTreeline,
    reference: usize,
    w: &WeightScheme,
) -> Result<StructureFit> {
    let mut residual = 0.0;
    let mut explained = 0.0;
    let mut projections = Vec::with_capacity(sample.len());
    for t in sample.trees().iter() {
        let (i, p) = project_onto_structure_treeline(t, l, w)?;
        residual += variation(t, p, w)?;
        explained += variation(l.element(reference), p, w)?;
        projections.push(i);
    }
    Ok(StructureFit {
        residual,
        explained,
        projections,
    })
}

/// `Σ V_δ(t, P_l(t))` over the sample.
pub fn structure_residual(
    sample: &TreeSample,
    l: &StructureTreeline,
    w: &WeightScheme,
) -> Result<f64> {
    let mut residual = 0.0;
    for t in sample.trees().iter() {
        let (_, p) = project_onto_structure_treeline(t, l, w)?;
        residual += variation(t, p, w)?;
    }
    Ok(residual)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalStructureResult {
    pub treeline: StructureTreeline,
    /// The minimal median-mean tree the treeline passes through.
    pub center: AttributedTree,
    /// Position of `center` in the treeline.
    pub center_position: usize,
    pub residual: f64,
    pub explained: f64,
    pub projections: Vec<usize>,
    /// Number of candidate treelines evaluated.
    pub candidates: usize,
}

/// The structure treeline through the minimal median-mean tree, inside the
/// average support tree, with the smallest total projection variation. Ties
/// keep the first treeline in chain order.
pub fn principal_structure_treeline(
    sample: &TreeSample,
    w: &WeightScheme,
) -> Result<PrincipalStructureResult> {
    let center = median_mean_tree(sample);
    let within = average_support_tree(sample);
    let lines = enumerate_structure_treelines(&center, &within)?;
    let candidates = lines.len();
    let mut best: Option<(StructureTreeline, usize, StructureFit)> = None;
    for l in lines {
        let pos = l
            .position_of(center.topology())
            .expect("enumerated treelines pass through the center");
        let fit = structure_fit(sample, &l, pos, w)?;
        if best
            .as_ref()
            .is_none_or(|(_, _, b)| fit.residual < b.residual)
        {
            best = Some((l, pos, fit));
        }
    }
    let (treeline, center_position, fit) = best.expect("at least one treeline");
    Ok(PrincipalStructureResult {
        treeline,
        center,
        center_position,
        residual: fit.residual,
        explained: fit.explained,
        projections: fit.projections,
        candidates,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlsOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        AlsOptions {
            max_iter: 500,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalAttributeResult {
    pub family: TreelineFamily,
    /// Per-tree coefficients, in sample order.
    pub coefficients: Vec<f64>,
    /// Per-tree element of the structure projection.
    pub elements: Vec<usize>,
    /// `Σ V_δ(t, P(t))` for the family projection.
    pub residual: f64,
    /// Objective after initialization and after every accepted iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Slots (node-major over the last element) no tree's data could update.
    pub frozen_slots: Vec<usize>,
}

impl PrincipalAttributeResult {
    pub fn direction(&self) -> &[f64] {
        self.family.direction()
    }
}

/// Masked rank-one problem: residuals `r_t` on each tree's mask of slots.
struct MaskedProblem {
    alpha: Vec<f64>,
    /// Per tree: slots (node-major over the last element) of its mask.
    masks: Vec<Vec<usize>>,
    residuals: Vec<Vec<f64>>,
    /// Part of the objective independent of `(c, λ)`.
    constant: f64,
}

impl MaskedProblem {
    fn build(
        sample: &TreeSample,
        l: &StructureTreeline,
        elements: &[usize],
        w: &WeightScheme,
    ) -> Result<Self> {
        let last = l.last();
        let p = last.arity();
        let full = last.topology();
        let mut alpha = Vec::with_capacity(full.len() * p);
        for &k in full.indices() {
            let a = w.require_alpha(k)?;
            alpha.extend(std::iter::repeat_n(a, p));
        }
        let centre = last.attribute_buffer();
        let mut masks = Vec::with_capacity(sample.len());
        let mut residuals = Vec::with_capacity(sample.len());
        let mut constant = 0.0;
        for (t, &i) in sample.trees().iter().zip(elements) {
            let u = l.element(i);
            constant += integer_distance(t.topology(), u.topology()) as f64;
            for (k, a) in t.nodes() {
                if !u.topology().contains(k) {
                    let ak = w.require_alpha(k)?;
                    constant += ak * a.iter().map(|x| x * x).sum::<f64>();
                }
            }
            let mut mask = Vec::with_capacity(u.topology().len() * p);
            let mut r = Vec::with_capacity(u.topology().len() * p);
            for &k in u.topology().indices() {
                let pos = full.position(k).expect("elements are nested");
                let x = t.attrs_of(k);
                for j in 0..p {
                    let s = pos * p + j;
                    mask.push(s);
                    r.push(x.map_or(0.0, |x| x[j]) - centre[s]);
                }
            }
            masks.push(mask);
            residuals.push(r);
        }
        Ok(MaskedProblem {
            alpha,
            masks,
            residuals,
            constant,
        })
    }

    fn slots(&self) -> usize {
        self.alpha.len()
    }

    fn lambdas(&self, c: &[f64]) -> Vec<f64> {
        self.masks
            .iter()
            .zip(&self.residuals)
            .map(|(m, r)| {
                let (mut num, mut den) = (0.0, 0.0);
                for (&s, &rs) in m.iter().zip(r) {
                    num += self.alpha[s] * rs * c[s];
                    den += self.alpha[s] * c[s] * c[s];
                }
                if den > 0.0 {
                    num / den
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn objective(&self, c: &[f64], lambdas: &[f64]) -> f64 {
        let mut total = self.constant;
        for ((m, r), &l) in self.masks.iter().zip(&self.residuals).zip(lambdas) {
            for (&s, &rs) in m.iter().zip(r) {
                let d = rs - l * c[s];
                total += self.alpha[s] * d * d;
            }
        }
        total
    }

    fn weighted_norm(&self, c: &[f64]) -> f64 {
        c.iter()
            .zip(&self.alpha)
            .map(|(x, a)| a * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Leading eigenvector of `Σ y yᵀ` with `y = sqrt(α)·r`, mapped back so
    /// that `‖c‖_w = 1`.
    fn initial_direction(&self) -> Result<Vec<f64>> {
        let n = self.slots();
        let scaled: Vec<Vec<(usize, f64)>> = self
            .masks
            .iter()
            .zip(&self.residuals)
            .map(|(m, r)| {
                m.iter()
                    .zip(r)
                    .map(|(&s, &rs)| (s, self.alpha[s].sqrt() * rs))
                    .collect()
            })
            .collect();
        let start = scaled
            .iter()
            .max_by(|a, b| sq_norm(a).total_cmp(&sq_norm(b)))
            .filter(|y| sq_norm(y) > 0.0)
            .ok_or(Error::DegenerateSample)?;
        let mut v = vec![0.0; n];
        for &(s, y) in start {
            v[s] = y;
        }
        normalize(&mut v);
        for _ in 0..10_000 {
            let mut next = vec![0.0; n];
            for y in &scaled {
                let dot: f64 = y.iter().map(|&(s, ys)| ys * v[s]).sum();
                for &(s, ys) in y {
                    next[s] += dot * ys;
                }
            }
            if !normalize(&mut next) {
                break;
            }
            let change = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            v = next;
            if change <= 1e-14 {
                break;
            }
        }
        Ok(v.iter()
            .zip(&self.alpha)
            .map(|(x, a)| x / a.sqrt())
            .collect())
    }
}

fn sq_norm(y: &[(usize, f64)]) -> f64 {
    y.iter().map(|(_, v)| v * v).sum()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Direction vector over `l`'s last element minimizing the residual of the
/// induced family, by alternating least squares on the masked rank-one model.
/// Each tree's mask is the set of slots of its structure projection.
pub fn principal_attribute_direction(
    sample: &TreeSample,
    l: &StructureTreeline,
    w: &WeightScheme,
    opts: AlsOptions,
) -> Result<PrincipalAttributeResult> {
    let mut elements = Vec::with_capacity(sample.len());
    for t in sample.trees().iter() {
        elements.push(project_onto_structure_treeline(t, l, w)?.0);
    }
    let problem = MaskedProblem::build(sample, l, &elements, w)?;
    if problem.residuals.iter().flatten().all(|&r| r == 0.0) {
        return Err(Error::DegenerateSample);
    }

    let mut c = problem.initial_direction()?;
    let mut lambdas = problem.lambdas(&c);
    let mut objective = problem.objective(&c, &lambdas);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    let mut frozen = vec![false; problem.slots()];

    while iterations < opts.max_iter {
        iterations += 1;
        let mut num = vec![0.0; problem.slots()];
        let mut den = vec![0.0; problem.slots()];
        for ((m, r), &lt) in problem.masks.iter().zip(&problem.residuals).zip(&lambdas) {
            for (&s, &rs) in m.iter().zip(r) {
                num[s] += lt * rs;
                den[s] += lt * lt;
            }
        }
        let mut next = c.clone();
        for s in 0..next.len() {
            frozen[s] = den[s] == 0.0;
            if !frozen[s] {
                next[s] = num[s] / den[s];
            }
        }
        let norm = problem.weighted_norm(&next);
        if norm == 0.0 || !norm.is_finite() {
            converged = true;
            break;
        }
        next.iter_mut().for_each(|x| *x /= norm);
        let next_lambdas = problem.lambdas(&next);
        let next_objective = problem.objective(&next, &next_lambdas);
        if next_objective > objective {
            // Rounding at a fixed point; keep the previous iterate.
            converged = true;
            break;
        }
        let decrease = objective - next_objective;
        c = next;
        lambdas = next_lambdas;
        trace.push(next_objective);
        let previous = objective;
        objective = next_objective;
        if decrease <= opts.tol * previous.abs() {
            converged = true;
            break;
        }
    }

    let lead = c.iter().enumerate().fold(
        0,
        |best, (s, x)| if x.abs() > c[best].abs() { s } else { best },
    );
    if c[lead] < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
        lambdas.iter_mut().for_each(|x| *x = -*x);
    }

    let family = TreelineFamily::new(l.clone(), c)?;
    let mut residual = 0.0;
    for ((t, &i), &lt) in sample.trees().iter().zip(&elements).zip(&lambdas) {
        let member = family.line_member(i, lt);
        residual += variation(t, &member, w)?;
    }
    Ok(PrincipalAttributeResult {
        family,
        coefficients: lambdas,
        elements,
        residual,
        trace,
        iterations,
        converged,
        frozen_slots: frozen
            .iter()
            .enumerate()
            .filter_map(|(s, &f)| f.then_some(s))
            .collect(),
    })
}

/// One tree's position in a family: structure element and attribute coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub id: String,
    pub element: usize,
    pub lambda: f64,
}

/// Per-tree projection coefficients onto `fam`, in sample order. Trees whose
/// element carries a zero direction get `λ = 0`.
pub fn projection_coefficients(
    sample: &TreeSample,
    fam: &TreelineFamily,
    w: &WeightScheme,
) -> Result<Vec<Coefficient>> {
    let mut out = Vec::with_capacity(sample.len());
    for (id, t) in sample.ids().iter().zip(sample.trees().iter()) {
        let (element, _) = project_onto_structure_treeline(t, fam.structure(), w)?;
        let u = fam.structure().element(element);
        let lambda = regression_coefficient(t, u, &fam.direction_for(element), w)?.unwrap_or(0.0);
        out.push(Coefficient {
            id: id.clone(),
            element,
            lambda,
        });
    }
    Ok(out)
}

/// `Σ V_δ(t, P(t))` over the sample for the family projection.
pub fn family_residual(sample: &TreeSample, fam: &TreelineFamily, w: &WeightScheme) -> Result<f64> {
    let mut residual = 0.0;
    for (t, c) in sample
        .trees()
        .iter()
        .zip(projection_coefficients(sample, fam, w)?)
    {
        residual += variation(t, &fam.line_member(c.element, c.lambda), w)?;
    }
    Ok(residual)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariationReport {
    /// `Σ V_δ(t, μ)` about the minimal median-mean tree.
    pub total: f64,
    pub structure_explained: f64,
    pub structure_residual: f64,
    /// Residual drop from the structure projection to the family projection.
    pub attribute_explained: f64,
    pub residual: f64,
    /// `total − structure_explained − structure_residual`.
    pub decomposition_gap: f64,
}

/// Full analysis of a sample: principal structure treeline, principal
/// attribute direction (absent when the sample has no attribute variation
/// about its structure projections) and the variation report.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub structure: PrincipalStructureResult,
    pub attribute: Option<PrincipalAttributeResult>,
    pub report: VariationReport,
}

pub fn analyze(sample: &TreeSample, w: &WeightScheme, opts: AlsOptions) -> Result<Analysis> {
    let structure = principal_structure_treeline(sample, w)?;
    let total = total_variation(sample, &structure.center, w)?.total();
    let attribute = match principal_attribute_direction(sample, &structure.treeline, w, opts) {
        Ok(a) => Some(a),
        Err(Error::DegenerateSample) => None,
        Err(e) => return Err(e),
    };
    let residual = attribute
        .as_ref()
        .map_or(structure.residual, |a| a.residual);
    let report = VariationReport {
        total,
        structure_explained: structure.explained,
        structure_residual: structure.residual,
        attribute_explained: structure.residual - residual,
        residual,
        decomposition_gap: total - structure.explained - structure.residual,
    };
    Ok(Analysis {
        structure,
        attribute,
        report,
    })
}

pub fn variation_report(sample: &TreeSample, w: &WeightScheme) -> Result<VariationReport> {
    Ok(analyze(sample, w, AlsOptions::default())?.report)
}
