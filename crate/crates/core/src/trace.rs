//! Step-by-step record of a candidate chain and comparison of two records.

use serde::{Deserialize, Serialize};

use crate::clustering::{CandidateChain, StepOrigin};
use crate::design::RobotRoster;
use crate::model::ClusterAssignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub c: usize,
    pub origin: String,
    /// Clusters right after the merge, robot ids per cluster.
    pub merged: Vec<Vec<String>>,
    /// Clusters of the final candidate, ascending strength.
    pub clusters: Vec<Vec<String>>,
    pub theta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainTrace {
    pub method: String,
    pub steps: Vec<TraceStep>,
}

fn named(g: &ClusterAssignment, roster: &RobotRoster) -> Vec<Vec<String>> {
    (0..g.count())
        .map(|k| g.members(k).into_iter().map(|i| roster.id(i).to_owned()).collect())
        .collect()
}

impl ChainTrace {
    pub fn from_chain(chain: &CandidateChain, roster: &RobotRoster) -> Self {
        let steps = chain
            .candidates
            .iter()
            .map(|cand| TraceStep {
                c: cand.c,
                origin: match cand.origin {
                    StepOrigin::Wmpr => "wmpr",
                    StepOrigin::Merge => "merge",
                    StepOrigin::Refined => "refined",
                }
                .to_owned(),
                merged: named(&cand.merged, roster),
                clusters: named(cand.model.assignment(), roster),
                theta: cand.model.theta().to_vec(),
                iterations: cand.trace.as_ref().map_or(0, |t| t.iterations),
                converged: cand.trace.as_ref().is_none_or(|t| t.converged),
            })
            .collect();
        ChainTrace { method: chain.method.name().to_owned(), steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Merge,
    Reassignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub c: usize,
    pub kind: DivergenceKind,
    pub left: Vec<Vec<String>>,
    pub right: Vec<Vec<String>>,
}

/// Partition as a label-free canonical form.
fn as_sets(p: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut sets: Vec<Vec<String>> = p
        .iter()
        .map(|cl| {
            let mut cl = cl.clone();
            cl.sort();
            cl
        })
        .collect();
    sets.sort();
    sets
}

/// First cluster count, scanning downward from the largest, at which the two
/// traces disagree, and whether the merge or the reassignment diverged.
pub fn trace_diff(left: &ChainTrace, right: &ChainTrace) -> Option<Divergence> {
    let mut cs: Vec<usize> = left.steps.iter().map(|s| s.c).collect();
    cs.extend(right.steps.iter().map(|s| s.c));
    cs.sort_unstable_by(|a, b| b.cmp(a));
    cs.dedup();
    for c in cs {
        let l = left.steps.iter().find(|s| s.c == c);
        let r = right.steps.iter().find(|s| s.c == c);
        match (l, r) {
            (Some(l), Some(r)) => {
                if as_sets(&l.merged) != as_sets(&r.merged) {
                    return Some(Divergence {
                        c,
                        kind: DivergenceKind::Merge,
                        left: l.merged.clone(),
                        right: r.merged.clone(),
                    });
                }
                if as_sets(&l.clusters) != as_sets(&r.clusters) {
                    return Some(Divergence {
                        c,
                        kind: DivergenceKind::Reassignment,
                        left: l.clusters.clone(),
                        right: r.clusters.clone(),
                    });
                }
            }
            (l, r) => {
                return Some(Divergence {
                    c,
                    kind: DivergenceKind::Merge,
                    left: l.map(|s| s.merged.clone()).unwrap_or_default(),
                    right: r.map(|s| s.merged.clone()).unwrap_or_default(),
                })
            }
        }
    }
    None
}
