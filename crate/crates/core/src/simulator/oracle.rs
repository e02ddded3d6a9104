//! Closed-form prediction errors of a fitted model under a known truth.
//!
//! Future matches are drawn uniformly from the rows of the schedule, with
//! `Y_o = x^T beta_o + sigma z` and `D_o` its outcome code.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::outcome;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::model::{outcome_from_prob, prob_from_score, ClusteredModel};
use crate::simulator::scenario::TruthSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleMspe {
    pub y: f64,
    pub p: f64,
    pub d: f64,
}

/// True win probability of every schedule row, `Phi(x^T beta_o / sigma)`.
/// With `sigma = 0` the outcome is deterministic and this is its code.
pub fn true_probabilities(truth: &TruthSpec, design: &DesignMatrix) -> Vec<f64> {
    let mu = truth.mean_response(design);
    if truth.sigma() == 0.0 {
        return mu.into_iter().map(outcome).collect();
    }
    let n = Normal::standard();
    mu.into_iter().map(|m| n.cdf(m / truth.sigma())).collect()
}

pub fn oracle_mspe(model: &ClusteredModel, truth: &TruthSpec, design: &DesignMatrix) -> Result<OracleMspe> {
    if model.robots() != truth.robots() || design.k() != truth.robots() {
        return Err(Error::Validation("model, truth and schedule cover different rosters".into()));
    }
    let mu = truth.mean_response(design);
    let probs = true_probabilities(truth, design);
    let beta = model.beta();
    let m = design.m() as f64;
    let deterministic = truth.sigma() == 0.0;
    let (mut sy, mut sp, mut sd) = (0.0, 0.0, 0.0);
    for (s, (&mu_s, &p)) in mu.iter().zip(&probs).enumerate() {
        let y_hat: f64 = design.x().row(s).iter().zip(beta).map(|(x, b)| x * b).sum();
        let p_hat = prob_from_score(model.cdf(), y_hat);
        let d_hat = outcome_from_prob(p_hat);
        sy += (y_hat - mu_s).powi(2);
        if deterministic {
            sp += (p - p_hat).powi(2);
            sd += (p - d_hat).powi(2);
        } else {
            sp += p * (1.0 - p) + (p - p_hat).powi(2);
            sd += p * (1.0 - d_hat).powi(2) + (1.0 - p) * d_hat * d_hat;
        }
    }
    let sigma2 = truth.sigma() * truth.sigma();
    Ok(OracleMspe { y: sigma2 + sy / m, p: sp / m, d: sd / m })
}

/// `sum_i (beta_hat_i - beta_o_i)^2` over all robots.
pub fn mse_strengths(model: &ClusteredModel, truth: &TruthSpec) -> Result<f64> {
    if model.robots() != truth.robots() {
        return Err(Error::Validation("model and truth cover different rosters".into()));
    }
    Ok(model.beta().iter().zip(truth.beta()).map(|(a, b)| (a - b).powi(2)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::outcome;
    use crate::model::{fit_wmprc, ClusterAssignment};
    use crate::simulator::rng::{standard_normal, stream, uniform_open};
    use crate::simulator::scenario::{generate_y, make_scenario, BaseScenario};
    use crate::simulator::schedule::synthetic_design;

    #[test]
    fn truth_equal_fit_attains_sigma_squared() {
        let d = synthetic_design(67, 112, 3).unwrap().1;
        let truth = make_scenario(BaseScenario::M1, 1.0, &d).unwrap();
        let residuals: Vec<f64> = (0..d.m()).map(|s| (s as f64 - 55.0) / 3.0).collect();
        let model = ClusteredModel::from_parts(truth.assignment().clone(), truth.strengths().to_vec(), residuals).unwrap();
        let o = oracle_mspe(&model, &truth, &d).unwrap();
        assert!((o.y - truth.sigma().powi(2)).abs() < 1e-9);
        assert_eq!(mse_strengths(&model, &truth).unwrap(), 0.0);
    }

    #[test]
    fn collapsed_fit_mse() {
        let d = synthetic_design(67, 112, 3).unwrap().1;
        let truth = make_scenario(BaseScenario::M1, 1.0, &d).unwrap();
        let zero = ClusteredModel::from_parts(ClusterAssignment::single(67), vec![0.0], vec![]).unwrap();
        let sizes = BaseScenario::M1.sizes();
        let raw = BaseScenario::M1.strengths();
        let mean = sizes.iter().zip(raw).map(|(&n, b)| n as f64 * b).sum::<f64>() / 67.0;
        let expect: f64 = sizes.iter().zip(raw).map(|(&n, b)| n as f64 * (b - mean).powi(2)).sum();
        let got = mse_strengths(&zero, &truth).unwrap();
        assert!((got - expect).abs() < 1e-9);
        assert!((got - 5047.927).abs() < 1e-3);
    }

    #[test]
    fn agrees_with_monte_carlo() {
        let (_, d) = synthetic_design(12, 30, 8).unwrap();
        let g = ClusterAssignment::new((0..12).map(|i| i / 4).collect(), 3).unwrap();
        let truth = crate::simulator::TruthSpec::new("t", g, vec![-4.0, 0.5, 3.0], 5.0).unwrap();
        let y = generate_y(&truth, &d, &mut stream(4, 0));
        let model = fit_wmprc(&d.with_response(y), &ClusterAssignment::new((0..12).map(|i| i % 3).collect(), 3).unwrap()).unwrap();
        let o = oracle_mspe(&model, &truth, &d).unwrap();

        let mu = truth.mean_response(&d);
        let n = 1_000_000;
        let mut rng = stream(99, 1);
        let (mut acc_y, mut acc_p, mut acc_d) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let s = ((uniform_open(&mut rng) * d.m() as f64) as usize).min(d.m() - 1);
            let y_o = mu[s] + truth.sigma() * standard_normal(&mut rng);
            let x = d.row(s);
            let y_hat: f64 = x.iter().zip(model.beta()).map(|(a, b)| a * b).sum();
            let p_hat = prob_from_score(model.cdf(), y_hat);
            let d_o = outcome(y_o);
            acc_y.push((y_o - y_hat).powi(2));
            acc_p.push((d_o - p_hat).powi(2));
            acc_d.push((d_o - outcome_from_prob(p_hat)).powi(2));
        }
        for (name, xs, target) in [("y", &acc_y, o.y), ("p", &acc_p, o.p), ("d", &acc_d, o.d)] {
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            assert!((mean - target).abs() < 3.0 * se + 1e-12, "{name}: mc {mean} vs oracle {target} (se {se})");
        }
    }
}
