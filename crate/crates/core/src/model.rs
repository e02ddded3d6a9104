//! Constrained least-squares fits of the clustered strength model.

use nalgebra::DVector;

use crate::design::{check_row, DesignMatrix};
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;

/// Cluster labels for `K` robots, 0-based (`0..count`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    count: usize,
}

impl ClusterAssignment {
    /// Every label in `0..count` must be used at least once.
    pub fn new(labels: Vec<usize>, count: usize) -> Result<Self> {
        if count == 0 || labels.is_empty() {
            return Err(Error::Validation("assignment needs at least one robot and one cluster".into()));
        }
        let mut seen = vec![false; count];
        for &l in &labels {
            if l >= count {
                return Err(Error::Validation(format!("cluster label {l} out of range 0..{count}")));
            }
            seen[l] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::Validation(format!("cluster {empty} has no robots")));
        }
        Ok(ClusterAssignment { labels, count })
    }

    /// Labels from arbitrary integers, renumbered densely in order of first appearance.
    pub fn from_raw(raw: &[usize]) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for &r in raw {
            let next = map.len();
            map.entry(r).or_insert(next);
        }
        ClusterAssignment::new(raw.iter().map(|r| map[r]).collect(), map.len())
    }

    /// Each robot in its own cluster.
    pub fn singletons(k: usize) -> Self {
        ClusterAssignment { labels: (0..k).collect(), count: k }
    }

    /// All robots in one cluster.
    pub fn single(k: usize) -> Self {
        ClusterAssignment { labels: vec![0; k], count: 1 }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn robots(&self) -> usize {
        self.labels.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.count];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Robots of cluster `k` in ascending index order.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == k).collect()
    }

    /// Renames cluster `k` to `new_label[k]`.
    pub fn relabel(&self, new_label: &[usize]) -> Self {
        ClusterAssignment {
            labels: self.labels.iter().map(|&l| new_label[l]).collect(),
            count: self.count,
        }
    }

    /// Relabels so that clusters ascend in `centroids` (ties keep label order).
    pub fn canonical_by(&self, centroids: &[f64]) -> (Self, Vec<usize>) {
        let new_label = ascending_ranks(centroids);
        (self.relabel(&new_label), new_label)
    }

    /// Partition as sorted member lists, ordered by smallest member.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut parts: Vec<Vec<usize>> = (0..self.count).map(|k| self.members(k)).collect();
        parts.sort();
        parts
    }
}

/// `ranks[k]` is the position of `values[k]` in ascending order, ties by index.
pub(crate) fn ascending_ranks(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (rank, &k) in order.iter().enumerate() {
        ranks[k] = rank;
    }
    ranks
}

/// Right-continuous empirical distribution function of residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        EmpiricalCdf { sorted }
    }

    /// `#{e <= t} / n`; NaN when there are no values.
    pub fn eval(&self, t: f64) -> f64 {
        if self.sorted.is_empty() {
            return f64::NAN;
        }
        let count = self.sorted.partition_point(|&e| e <= t);
        count as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }
}

/// A fitted clustered model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredModel {
    assignment: ClusterAssignment,
    theta: Vec<f64>,
    beta: Vec<f64>,
    residuals: Vec<f64>,
    cdf: EmpiricalCdf,
    rss: f64,
}

impl ClusteredModel {
    /// Assembles a model from cluster strengths and residuals, keeping labels as given.
    pub fn from_parts(assignment: ClusterAssignment, theta: Vec<f64>, residuals: Vec<f64>) -> Result<Self> {
        if theta.len() != assignment.count() {
            return Err(Error::Validation(format!(
                "{} strengths for {} clusters",
                theta.len(),
                assignment.count()
            )));
        }
        let beta = assignment.labels().iter().map(|&l| theta[l]).collect();
        let rss = residuals.iter().map(|e| e * e).sum();
        let cdf = EmpiricalCdf::new(&residuals);
        Ok(ClusteredModel { assignment, theta, beta, residuals, cdf, rss })
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    pub fn clusters(&self) -> usize {
        self.assignment.count()
    }

    pub fn robots(&self) -> usize {
        self.beta.len()
    }

    /// Cluster strengths, indexed by cluster label.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Per-robot strengths.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn cdf(&self) -> &EmpiricalCdf {
        &self.cdf
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }

    /// Same strengths with clusters renumbered in ascending strength.
    pub fn canonicalize(&self) -> Self {
        let (assignment, new_label) = self.assignment.canonical_by(&self.theta);
        let mut theta = vec![0.0; self.theta.len()];
        for (old, &new) in new_label.iter().enumerate() {
            theta[new] = self.theta[old];
        }
        ClusteredModel { assignment, theta, ..self.clone() }
    }
}

/// Factorisation of the reduced design behind a fit, in canonical label order.
#[derive(Debug, Clone)]
pub(crate) struct ReducedFit {
    pub ls: LeastSquares,
}

/// Least-squares fit of the model with clusters `g`, normalised so that
/// robot strengths sum to zero and clusters ascend in strength.
pub fn fit_wmprc(design: &DesignMatrix, g: &ClusterAssignment) -> Result<ClusteredModel> {
    fit_factored(design, g).map(|(model, _)| model)
}

pub(crate) fn fit_factored(design: &DesignMatrix, g: &ClusterAssignment) -> Result<(ClusteredModel, ReducedFit)> {
    if g.robots() != design.k() {
        return Err(Error::Validation(format!(
            "assignment covers {} robots, design has {}",
            g.robots(),
            design.k()
        )));
    }
    let xr = design.reduced(g);
    let ls = LeastSquares::new(&xr);
    let raw = ls.solve(design.y());
    let theta = center(raw.as_slice(), &g.sizes());

    let (assignment, new_label) = g.canonical_by(&theta);
    let c = g.count();
    let mut canon_theta = vec![0.0; c];
    let mut old_of_new = vec![0; c];
    for (old, &new) in new_label.iter().enumerate() {
        canon_theta[new] = theta[old];
        old_of_new[new] = old;
    }
    let ls = ls.permute_coefficients(&old_of_new);

    let beta: Vec<f64> = assignment.labels().iter().map(|&l| canon_theta[l]).collect();
    let fitted = design.x() * DVector::from_column_slice(&beta);
    let residuals: Vec<f64> = design.y().iter().zip(fitted.iter()).map(|(y, f)| y - f).collect();
    let model = ClusteredModel::from_parts(assignment, canon_theta, residuals)?;
    Ok((model, ReducedFit { ls }))
}

/// Shifts cluster strengths so that `sum_k sizes[k] * theta[k] = 0`.
pub(crate) fn center(theta: &[f64], sizes: &[usize]) -> Vec<f64> {
    let k: usize = sizes.iter().sum();
    let weighted: f64 = theta.iter().zip(sizes).map(|(t, &n)| t * n as f64).sum();
    let shift = weighted / k as f64;
    theta.iter().map(|t| t - shift).collect()
}

/// `x_o^T beta`.
pub fn predict_score(model: &ClusteredModel, x_o: &[f64]) -> Result<f64> {
    check_row(x_o, model.robots())?;
    Ok(x_o.iter().zip(model.beta()).map(|(x, b)| x * b).sum())
}

/// `1 - F(-y_hat)` with the model's residual distribution.
pub fn predict_prob(model: &ClusteredModel, x_o: &[f64]) -> Result<f64> {
    let y_hat = predict_score(model, x_o)?;
    if model.cdf().is_empty() {
        return Err(Error::Validation("model carries no residuals".into()));
    }
    Ok(prob_from_score(model.cdf(), y_hat))
}

pub fn predict_outcome(model: &ClusteredModel, x_o: &[f64]) -> Result<f64> {
    predict_prob(model, x_o).map(outcome_from_prob)
}

pub(crate) fn prob_from_score(cdf: &EmpiricalCdf, y_hat: f64) -> f64 {
    1.0 - cdf.eval(-y_hat)
}

/// `I(p > 0.5) + 0.5 I(p = 0.5)`.
pub fn outcome_from_prob(p: f64) -> f64 {
    if p - 0.5 > 0.0 {
        1.0
    } else if p - 0.5 == 0.0 {
        0.5
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, MatchRecord, RobotRoster};

    fn one_match() -> DesignMatrix {
        let roster = RobotRoster::new(["A", "B", "C", "D", "E", "F"]).unwrap();
        let m = MatchRecord::new("qm1", ["A", "B", "C"], ["D", "E", "F"], 30, 21);
        build_design(&[m], &roster).unwrap()
    }

    #[test]
    fn single_match_two_clusters() {
        let d = one_match();
        let g = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let m = fit_wmprc(&d, &g).unwrap();
        // Red cluster ends up holding +1.5 after ascending relabel.
        assert!((m.theta()[0] + 1.5).abs() < 1e-12);
        assert!((m.theta()[1] - 1.5).abs() < 1e-12);
        assert_eq!(m.assignment().labels(), &[1, 1, 1, 0, 0, 0]);
        assert!(m.rss() < 1e-20);
    }

    #[test]
    fn one_cluster_is_zero() {
        let d = one_match();
        let m = fit_wmprc(&d, &ClusterAssignment::single(6)).unwrap();
        assert_eq!(m.theta(), &[0.0]);
        assert_eq!(m.beta(), &[0.0; 6]);
        assert_eq!(m.residuals(), &[9.0]);
    }

    #[test]
    fn empirical_cdf_steps() {
        let f = EmpiricalCdf::new(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(f.eval(-3.0), 0.0);
        assert_eq!(f.eval(-2.0), 0.2);
        assert_eq!(f.eval(-1.5), 0.2);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(10.0), 1.0);
    }

    #[test]
    fn probability_and_outcome_rules() {
        let f = EmpiricalCdf::new(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!((prob_from_score(&f, 1.5) - 0.8).abs() < 1e-15);
        assert_eq!(prob_from_score(&f, 2.5), 1.0);
        assert_eq!(outcome_from_prob(0.8), 1.0);
        assert_eq!(outcome_from_prob(0.5), 0.5);
        assert_eq!(outcome_from_prob(0.2), 0.0);
    }

    #[test]
    fn predictions_on_fitted_example() {
        let d = one_match();
        let g = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let m = fit_wmprc(&d, &g).unwrap();
        let x = d.row(0);
        assert!((predict_score(&m, &x).unwrap() - 9.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((predict_score(&m, &neg).unwrap() + 9.0).abs() < 1e-12);
        assert!(predict_score(&m, &[1.0; 6]).is_err());
    }

    #[test]
    fn assignment_validation() {
        assert!(ClusterAssignment::new(vec![0, 2, 2], 3).is_err());
        assert!(ClusterAssignment::new(vec![0, 3], 3).is_err());
        let g = ClusterAssignment::from_raw(&[7, 7, 2, 9]).unwrap();
        assert_eq!(g.labels(), &[0, 0, 1, 2]);
        assert_eq!(g.sizes(), vec![2, 1, 1]);
    }
}
