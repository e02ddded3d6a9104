//! Nested-relation and rank-correlation indices between fitted models.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::ClusteredModel;
use crate::simulator::TruthSpec;

/// Strength of a nested relation or association.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrengthLabel {
    Outstanding,
    Excellent,
    Acceptable,
    Poor,
}

impl StrengthLabel {
    pub fn name(self) -> &'static str {
        match self {
            StrengthLabel::Outstanding => "outstanding",
            StrengthLabel::Excellent => "excellent",
            StrengthLabel::Acceptable => "acceptable",
            StrengthLabel::Poor => "poor",
        }
    }
}

impl fmt::Display for StrengthLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn classify_strength(value: f64) -> StrengthLabel {
    if value >= 0.9 {
        StrengthLabel::Outstanding
    } else if value >= 0.8 {
        StrengthLabel::Excellent
    } else if value >= 0.7 {
        StrengthLabel::Acceptable
    } else {
        StrengthLabel::Poor
    }
}

/// Index of the entry of `centers` closest to `v`; ties to the smallest index.
fn nearest(v: f64, centers: &[f64]) -> usize {
    let mut best = 0;
    for (j, &c) in centers.iter().enumerate().skip(1) {
        if (v - c).abs() < (v - centers[best]).abs() {
            best = j;
        }
    }
    best
}

/// Fraction of robots whose strength under `model` is nearest to the
/// reference cluster they belong to.
fn directional(model_beta: &[f64], ref_theta: &[f64], ref_labels: &[usize]) -> f64 {
    let hits = model_beta
        .iter()
        .zip(ref_labels)
        .filter(|(&b, &l)| nearest(b, ref_theta) == l)
        .count();
    hits as f64 / model_beta.len() as f64
}

fn same_roster(a: usize, b: usize) -> Result<()> {
    if a != b || a == 0 {
        return Err(Error::Validation(format!("models cover {a} and {b} robots")));
    }
    Ok(())
}

/// Matching index of the nested relation. The model with fewer clusters is
/// the reference; with equal counts each direction is weighted one half.
pub fn minr(a: &ClusteredModel, b: &ClusteredModel) -> Result<f64> {
    same_roster(a.robots(), b.robots())?;
    let ab = || directional(a.beta(), b.theta(), b.assignment().labels());
    let ba = || directional(b.beta(), a.theta(), a.assignment().labels());
    Ok(match a.clusters().cmp(&b.clusters()) {
        std::cmp::Ordering::Greater => ab(),
        std::cmp::Ordering::Less => ba(),
        std::cmp::Ordering::Equal => (ab() + ba()) / 2.0,
    })
}

/// MINR with the true clustering as the reference.
pub fn minr_vs_truth(model: &ClusteredModel, truth: &TruthSpec) -> Result<f64> {
    same_roster(model.robots(), truth.robots())?;
    Ok(directional(model.beta(), truth.strengths(), truth.assignment().labels()))
}

/// Fraction of ordered robot pairs ordered the same way by both strength
/// vectors, counting pairs tied under both as agreeing.
pub fn rank_correlation_beta(a: &[f64], b: &[f64]) -> Result<f64> {
    same_roster(a.len(), b.len())?;
    let k = a.len();
    if k < 2 {
        return Err(Error::Validation("rank correlation needs at least two robots".into()));
    }
    let mut agree = 0u64;
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let (da, db) = (a[i] - a[j], b[i] - b[j]);
            if da * db > 0.0 || (a[i] == a[j] && b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    Ok(agree as f64 / (k * (k - 1)) as f64)
}

pub fn rank_correlation(a: &ClusteredModel, b: &ClusteredModel) -> Result<f64> {
    rank_correlation_beta(a.beta(), b.beta())
}

pub fn rank_correlation_vs_truth(model: &ClusteredModel, truth: &TruthSpec) -> Result<f64> {
    rank_correlation_beta(model.beta(), &truth.beta())
}
