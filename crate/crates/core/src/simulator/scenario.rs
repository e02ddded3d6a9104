//! Ground-truth scenarios and response generation.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::RngCore;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::model::{center, ClusterAssignment};
use crate::simulator::rng::standard_normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorFamily {
    Normal,
}

/// A simulation ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSpec {
    name: String,
    assignment: ClusterAssignment,
    recorded: Vec<f64>,
    strengths: Vec<f64>,
    sigma: f64,
    family: ErrorFamily,
}

impl TruthSpec {
    /// `strengths` are the per-cluster values as recorded. They are
    /// re-centred so that robot strengths sum to zero; the centred values
    /// are the ones fitted models are compared against.
    pub fn new(name: impl Into<String>, assignment: ClusterAssignment, strengths: Vec<f64>, sigma: f64) -> Result<Self> {
        if strengths.len() != assignment.count() {
            return Err(Error::Validation(format!(
                "{} strengths for {} true clusters",
                strengths.len(),
                assignment.count()
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Validation(format!("error scale {sigma} must be finite and >= 0")));
        }
        let centred = center(&strengths, &assignment.sizes());
        Ok(TruthSpec {
            name: name.into(),
            assignment,
            recorded: strengths,
            strengths: centred,
            sigma,
            family: ErrorFamily::Normal,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn c_o(&self) -> usize {
        self.assignment.count()
    }

    pub fn robots(&self) -> usize {
        self.assignment.robots()
    }

    pub fn assignment(&self) -> &ClusterAssignment {
        &self.assignment
    }

    /// Centred cluster strengths.
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    pub fn recorded_strengths(&self) -> &[f64] {
        &self.recorded
    }

    /// Centred per-robot strengths.
    pub fn beta(&self) -> Vec<f64> {
        self.assignment.labels().iter().map(|&l| self.strengths[l]).collect()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn family(&self) -> ErrorFamily {
        self.family
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        TruthSpec::new(self.name.clone(), self.assignment.clone(), self.recorded.clone(), sigma)
    }

    /// Expected score difference of every match, `x_s^T beta_o`.
    ///
    /// Summed over true clusters with integer alliance counts, so a match
    /// whose alliances have the same cluster composition gets exactly zero.
    pub fn mean_response(&self, design: &DesignMatrix) -> Vec<f64> {
        let c = self.c_o();
        let labels = self.assignment.labels();
        design
            .alliances()
            .iter()
            .map(|(red, blue)| {
                let mut counts = vec![0i32; c];
                for &i in red {
                    counts[labels[i]] += 1;
                }
                for &i in blue {
                    counts[labels[i]] -= 1;
                }
                counts
                    .iter()
                    .zip(&self.strengths)
                    .filter(|(&n, _)| n != 0)
                    .map(|(&n, &t)| f64::from(n) * t)
                    .sum()
            })
            .collect()
    }
}

/// The two published base scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseScenario {
    M1,
    M2,
}

impl BaseScenario {
    pub fn name(self) -> &'static str {
        match self {
            BaseScenario::M1 => "M1",
            BaseScenario::M2 => "M2",
        }
    }

    pub fn strengths(self) -> &'static [f64] {
        match self {
            BaseScenario::M1 => &[-15.07, -4.75, 4.76, 14.52],
            BaseScenario::M2 => &[-18.16, -13.57, -9.81, -0.58, 4.88, 7.90, 11.16, 18.20],
        }
    }

    pub fn sizes(self) -> &'static [usize] {
        match self {
            BaseScenario::M1 => &[9, 25, 24, 9],
            BaseScenario::M2 => &[5, 3, 8, 22, 17, 6, 5, 2],
        }
    }

    /// Error scale of the base fit. Reported to three decimals as 11.056 and
    /// 10.275; these values also round correctly at every reported multiple.
    pub fn sigma_hat(self) -> f64 {
        match self {
            BaseScenario::M1 => 11.05585,
            BaseScenario::M2 => 10.2746,
        }
    }

    pub fn robots(self) -> usize {
        self.sizes().iter().sum()
    }

    /// Division whose schedule the scenario was built on.
    pub fn division(self) -> &'static str {
        match self {
            BaseScenario::M1 => "2019roe",
            BaseScenario::M2 => "2019dal",
        }
    }

    /// Qualification match count of that division.
    pub fn matches(self) -> usize {
        match self {
            BaseScenario::M1 => 112,
            BaseScenario::M2 => 114,
        }
    }
}

impl fmt::Display for BaseScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(BaseScenario::M1),
            "M2" => Ok(BaseScenario::M2),
            _ => Err(Error::Validation(format!("unknown scenario `{s}` (expected M1 or M2)"))),
        }
    }
}

/// Truth for a base scenario at `multiplier` times its error scale.
///
/// Clusters occupy consecutive blocks of the roster, lowest strength first.
pub fn make_scenario(base: BaseScenario, multiplier: f64, design: &DesignMatrix) -> Result<TruthSpec> {
    let sizes = base.sizes();
    let k: usize = sizes.iter().sum();
    if design.k() != k {
        return Err(Error::Validation(format!(
            "scenario {base} needs {k} robots, schedule has {}",
            design.k()
        )));
    }
    let labels = sizes.iter().enumerate().flat_map(|(l, &n)| std::iter::repeat_n(l, n)).collect();
    let g = ClusterAssignment::new(labels, sizes.len())?;
    TruthSpec::new(base.name(), g, base.strengths().to_vec(), multiplier * base.sigma_hat())
}

/// `Y = X beta_o + sigma z` with one standard normal draw per match.
pub fn generate_y(truth: &TruthSpec, design: &DesignMatrix, rng: &mut impl RngCore) -> DVector<f64> {
    let mu = truth.mean_response(design);
    DVector::from_iterator(
        mu.len(),
        mu.iter().map(|&m| {
            let z = standard_normal(rng);
            if truth.sigma() == 0.0 {
                m
            } else {
                m + truth.sigma() * z
            }
        }),
    )
}
