//! Centroid linkage, hierarchical merging, breakout reassignment and the
//! candidate chains built from them.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::crossval::{evaluate, loo_from_fit, mspe_hats, CriterionRow};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::model::{fit_factored, fit_wmprc, ClusterAssignment, ClusteredModel, ReducedFit};

/// Default stopping tolerance of the reassignment loop.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Default iteration cap of the reassignment loop.
pub const DEFAULT_MAX_ITER: usize = 100;

/// Below this relative residual norm a robot's column is treated as lying in
/// the span of the reduced design and its breakout is fitted from scratch.
const BREAKOUT_DEGENERATE: f64 = 1e-6;

/// Agglomerative centroid linkage of scalars down to `target` clusters.
///
/// On the line the closest centroids are always neighbours in sorted order,
/// so only adjacent clusters are compared. Equal distances are resolved in
/// favour of the lexicographically smallest pair of cluster ids, where a
/// cluster's id is its smallest member index. Output labels ascend by centroid.
pub fn centroid_linkage(values: &[f64], target: usize) -> Result<ClusterAssignment> {
    let k = values.len();
    if target == 0 || target > k {
        return Err(Error::Validation(format!("linkage target {target} outside 1..={k}")));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("linkage value {bad} is not finite")));
    }

    struct Group {
        members: Vec<usize>,
        centroid: f64,
    }
    let centroid_of = |members: &[usize]| members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64;
    let key = |g: &Group| (g.centroid, g.members[0]);

    let mut groups: Vec<Group> = (0..k).map(|i| Group { members: vec![i], centroid: values[i] }).collect();
    groups.sort_by(|a, b| key(a).0.total_cmp(&key(b).0).then(key(a).1.cmp(&key(b).1)));

    while groups.len() > target {
        let gaps: Vec<f64> = groups.windows(2).map(|w| w[1].centroid - w[0].centroid).collect();
        let delta = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        // Candidate pairs as (smaller id, larger id, position a, position b).
        let mut best: Option<(usize, usize, usize, usize)> = None;
        let mut offer = |a: usize, b: usize, groups: &[Group]| {
            let (ia, ib) = (groups[a].members[0], groups[b].members[0]);
            let cand = if ia < ib { (ia, ib, a, b) } else { (ib, ia, b, a) };
            if best.is_none_or(|cur| (cand.0, cand.1) < (cur.0, cur.1)) {
                best = Some(cand);
            }
        };
        if delta > 0.0 {
            for (p, &gap) in gaps.iter().enumerate() {
                if gap == delta {
                    offer(p, p + 1, &groups);
                }
            }
        } else {
            // Every pair within a run of equal centroids is at distance zero.
            let mut start = 0;
            while start < groups.len() {
                let mut end = start + 1;
                while end < groups.len() && groups[end].centroid == groups[start].centroid {
                    end += 1;
                }
                if end - start >= 2 {
                    let mut ids: Vec<(usize, usize)> =
                        (start..end).map(|p| (groups[p].members[0], p)).collect();
                    ids.sort();
                    offer(ids[0].1, ids[1].1, &groups);
                }
                start = end;
            }
        }
        let (_, _, a, b) = best.expect("at least two groups remain");
        let (lo, hi) = (a.min(b), a.max(b));
        let absorbed = groups.remove(hi);
        let keep = &mut groups[lo];
        keep.members.extend(absorbed.members);
        keep.members.sort_unstable();
        keep.centroid = centroid_of(&keep.members);
        groups.sort_by(|a, b| key(a).0.total_cmp(&key(b).0).then(key(a).1.cmp(&key(b).1)));
    }

    let mut labels = vec![0; k];
    for (label, g) in groups.iter().enumerate() {
        for &i in &g.members {
            labels[i] = label;
        }
    }
    ClusterAssignment::new(labels, target)
}

/// Merges the two clusters whose strengths are closest.
///
/// Ties go to the smallest label pair. The merged cluster takes the
/// size-weighted mean strength as provisional centroid before the canonical
/// relabel, and is ordered first among equal centroids.
pub fn merge_closest(model: &ClusteredModel) -> Result<ClusterAssignment> {
    let g = model.assignment();
    let c = g.count();
    if c < 2 {
        return Err(Error::Validation("cannot merge a single cluster".into()));
    }
    let theta = model.theta();
    let mut best = (f64::INFINITY, 0, 1);
    for l in 0..c {
        for m in l + 1..c {
            let d = (theta[l] - theta[m]).abs();
            if d < best.0 {
                best = (d, l, m);
            }
        }
    }
    let (_, l, m) = best;
    Ok(merge_pair(g, theta, l, m))
}

fn merge_pair(g: &ClusterAssignment, theta: &[f64], l: usize, m: usize) -> ClusterAssignment {
    let sizes = g.sizes();
    let c = g.count();
    let mut provisional = vec![0; c];
    let mut centroids = vec![
        (sizes[l] as f64 * theta[l] + sizes[m] as f64 * theta[m]) / (sizes[l] + sizes[m]) as f64,
    ];
    for k in 0..c {
        if k == l || k == m {
            continue;
        }
        provisional[k] = centroids.len();
        centroids.push(theta[k]);
    }
    let merged = ClusterAssignment::new(g.labels().iter().map(|&k| provisional[k]).collect(), c - 1)
        .expect("merging keeps every cluster non-empty");
    merged.canonical_by(&centroids).0
}

/// Per-robot strengths after letting each robot of a shared cluster break out
/// into its own singleton cluster.
pub fn breakout_strengths(design: &DesignMatrix, model: &ClusteredModel) -> Result<Vec<f64>> {
    let (fit, reduced) = fit_factored(design, model.assignment())?;
    let mut out = breakout_from_fit(design, &fit, &reduced);
    let sizes = model.assignment().sizes();
    for (i, v) in out.iter_mut().enumerate() {
        if sizes[model.assignment().label(i)] < 2 {
            *v = model.beta()[i];
        }
    }
    Ok(out)
}

/// Fast breakout using the factorisation of the current fit.
///
/// Adding robot `i`'s own column `x_i` to the reduced design leaves the old
/// coefficients moved along `W = X~^+ X` and gives the new coefficient
/// `b = x_i^T e / |r_i|^2` with `r_i` the part of `x_i` outside `col(X~)`.
/// Re-centring the split model then yields the strength written below.
pub(crate) fn breakout_from_fit(design: &DesignMatrix, model: &ClusteredModel, reduced: &ReducedFit) -> Vec<f64> {
    let g = model.assignment();
    let sizes = g.sizes();
    let k = design.k();
    let c = g.count();
    let mut out = model.beta().to_vec();
    if sizes.iter().all(|&n| n < 2) {
        return out;
    }
    // The only null direction of X~ must be the all-ones vector for the
    // update to match a cold minimum-norm fit.
    let regular = reduced.ls.rank() + 1 == c || (c == 1 && reduced.ls.rank() == 0);
    let x = design.x();
    let e = DVector::from_column_slice(model.residuals());
    let xte = x.tr_mul(&e);
    let (w, r) = if regular {
        (Some(reduced.ls.solve_many(x)), Some(reduced.ls.residualize(x)))
    } else {
        (None, None)
    };
    let kf = k as f64;
    for i in 0..k {
        let label = g.label(i);
        if sizes[label] < 2 {
            continue;
        }
        let fast = match (&w, &r) {
            (Some(w), Some(r)) => {
                let r2 = r.column(i).norm_squared();
                let x2 = x.column(i).norm_squared();
                if r2.sqrt() < BREAKOUT_DEGENERATE * x2.sqrt() {
                    None
                } else {
                    let b = xte[i] / r2;
                    let nw: f64 = (0..c).map(|j| sizes[j] as f64 * w[(j, i)]).sum();
                    Some(model.theta()[label] + b * (1.0 - w[(label, i)] - (1.0 - nw) / kf))
                }
            }
            _ => None,
        };
        out[i] = match fast {
            Some(v) => v,
            None => cold_breakout(design, g, i),
        };
    }
    out
}

/// Strength of robot `i` from a fresh fit with `i` in its own cluster.
pub(crate) fn cold_breakout(design: &DesignMatrix, g: &ClusterAssignment, i: usize) -> f64 {
    let mut labels = g.labels().to_vec();
    labels[i] = g.count();
    let split = ClusterAssignment::new(labels, g.count() + 1).expect("robot shares its cluster");
    fit_wmprc(design, &split).expect("split assignment matches design").beta()[i]
}

/// Iteration history of one reassignment run.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTrace {
    /// Number of reassignment iterations performed.
    pub iterations: usize,
    /// Strength vectors of every iterate, starting with the initial fit.
    pub history: Vec<Vec<f64>>,
    pub converged: bool,
    pub epsilon: f64,
}

/// Repeats breakout, centroid linkage back to the same cluster count, and
/// refit, until the new strengths come within `epsilon` of some earlier
/// iterate or `max_iter` iterations have run.
pub fn refine_nonhierarchical(
    design: &DesignMatrix,
    g: &ClusterAssignment,
    epsilon: f64,
    max_iter: usize,
) -> Result<(ClusteredModel, RefinementTrace)> {
    refine_factored(design, g, epsilon, max_iter).map(|(model, _, trace)| (model, trace))
}

fn refine_factored(
    design: &DesignMatrix,
    g: &ClusterAssignment,
    epsilon: f64,
    max_iter: usize,
) -> Result<(ClusteredModel, ReducedFit, RefinementTrace)> {
    let c = g.count();
    let (mut model, mut reduced) = fit_factored(design, g)?;
    let mut history = vec![model.beta().to_vec()];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let strengths = breakout_from_fit(design, &model, &reduced);
        let next = centroid_linkage(&strengths, c)?;
        let (m, r) = fit_factored(design, &next)?;
        model = m;
        reduced = r;
        let beta = model.beta();
        let closest = history
            .iter()
            .map(|h| h.iter().zip(beta).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        history.push(beta.to_vec());
        if closest < epsilon {
            converged = true;
            break;
        }
    }
    let trace = RefinementTrace { iterations, history, converged, epsilon };
    Ok((model, reduced, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Merging with reassignment after every merge below `K - 1`.
    Tcl,
    /// Sequential merging only.
    Lct,
    /// The merge sequence of `Lct`, each candidate then reassigned.
    Alt,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Tcl, Method::Lct, Method::Alt];

    pub fn name(self) -> &'static str {
        match self {
            Method::Tcl => "TCL",
            Method::Lct => "LCT",
            Method::Alt => "ALT",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.to_ascii_uppercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == up)
            .ok_or_else(|| Error::Validation(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub epsilon: f64,
    pub max_iter: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { epsilon: DEFAULT_EPSILON, max_iter: DEFAULT_MAX_ITER }
    }
}

/// How a candidate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOrigin {
    /// Every robot its own cluster.
    Wmpr,
    /// Closest-pair merge without reassignment.
    Merge,
    /// Merge followed by reassignment.
    Refined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub c: usize,
    pub model: ClusteredModel,
    pub row: CriterionRow,
    pub origin: StepOrigin,
    /// Clustering produced by the merge, before any reassignment.
    pub merged: ClusterAssignment,
    pub trace: Option<RefinementTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateChain {
    pub method: Method,
    /// Candidates for `c = K` down to `2`.
    pub candidates: Vec<Candidate>,
}

impl CandidateChain {
    pub fn get(&self, c: usize) -> Option<&Candidate> {
        self.candidates.iter().find(|cand| cand.c == c)
    }

    pub fn rows(&self) -> Vec<&CriterionRow> {
        self.candidates.iter().map(|c| &c.row).collect()
    }

    pub fn robots(&self) -> usize {
        self.candidates[0].model.robots()
    }
}

pub fn generate_candidates(design: &DesignMatrix, method: Method) -> Result<CandidateChain> {
    generate_candidates_with(design, method, &ChainOptions::default())
}

pub fn generate_candidates_with(design: &DesignMatrix, method: Method, opts: &ChainOptions) -> Result<CandidateChain> {
    let k = design.k();
    if k < 3 || design.m() < 2 {
        return Err(Error::Validation(format!(
            "candidate search needs K >= 3 and M >= 2, got K = {k}, M = {}",
            design.m()
        )));
    }
    let singletons = ClusterAssignment::singletons(k);
    let (wmpr, row, _) = evaluate(design, &singletons)?;
    let mut candidates = vec![Candidate {
        c: k,
        model: wmpr,
        row,
        origin: StepOrigin::Wmpr,
        merged: singletons,
        trace: None,
    }];

    match method {
        Method::Lct => {
            for _ in (2..k).rev() {
                let prev = &candidates.last().expect("chain not empty").model;
                let merged = merge_closest(prev)?;
                candidates.push(plain(design, merged)?);
            }
        }
        Method::Tcl => {
            let merged = merge_closest(&candidates[0].model)?;
            candidates.push(plain(design, merged)?);
            for _ in (3..k).rev() {
                let prev = &candidates.last().expect("chain not empty").model;
                let merged = merge_closest(prev)?;
                candidates.push(refined(design, merged, opts)?);
            }
        }
        Method::Alt => {
            let mut unrefined = candidates[0].model.clone();
            for c in (2..k).rev() {
                let merged = merge_closest(&unrefined)?;
                if c == k - 1 {
                    let cand = plain(design, merged)?;
                    unrefined = cand.model.clone();
                    candidates.push(cand);
                } else {
                    unrefined = fit_wmprc(design, &merged)?;
                    candidates.push(refined(design, merged, opts)?);
                }
            }
        }
    }
    Ok(CandidateChain { method, candidates })
}

fn plain(design: &DesignMatrix, merged: ClusterAssignment) -> Result<Candidate> {
    let (model, row, _) = evaluate(design, &merged)?;
    Ok(Candidate { c: merged.count(), model, row, origin: StepOrigin::Merge, merged, trace: None })
}

fn refined(design: &DesignMatrix, merged: ClusterAssignment, opts: &ChainOptions) -> Result<Candidate> {
    let (model, reduced, trace) = refine_factored(design, &merged, opts.epsilon, opts.max_iter)?;
    let row = mspe_hats(&loo_from_fit(&model, &reduced, design), design);
    Ok(Candidate {
        c: merged.count(),
        model,
        row,
        origin: StepOrigin::Refined,
        merged,
        trace: Some(trace),
    })
}

/// Reduced-design rank of a clustering, for diagnostics.
pub fn reduced_rank(design: &DesignMatrix, g: &ClusterAssignment) -> usize {
    LeastSquares::new(&design.reduced(g)).rank()
}
