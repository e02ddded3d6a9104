//! Leave-one-out estimates of the prediction errors.
//!
//! Deleting a match is a rank-one downdate of the reduced least-squares fit,
//! so every held-out prediction comes from one factorisation of the full
//! design: with hat matrix `H` and residuals `e`,
//! `Y_s - Yhat_s^{-s} = e_s / (1 - h_ss)` and the residual of match `t`
//! under the fit without `s` is `e_t + H_ts e_s / (1 - h_ss)`.

use std::fmt;
use std::str::FromStr;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::LeastSquares;
use crate::model::{fit_factored, outcome_from_prob, ClusterAssignment, ClusteredModel, ReducedFit};

/// Leverages at or above `1 - LEVERAGE_TOL` make a candidate infeasible.
pub const LEVERAGE_TOL: f64 = 1e-10;

/// Relative floor below which LOO residuals and predictions are treated as zero.
pub const EXACT_FIT_TOL: f64 = 1e-10;

/// Held-out quantities for one match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LooRecord {
    pub leverage: f64,
    pub y_loo: f64,
    pub p_loo: f64,
    pub d_loo: f64,
}

/// LOO records of one candidate, in match order.
#[derive(Debug, Clone, PartialEq)]
pub struct LooSet {
    pub assignment: ClusterAssignment,
    pub records: Vec<LooRecord>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    MspeY,
    MspeP,
    MspeD,
    MspebY,
    MspebP,
    MspebD,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::MspeY,
        Criterion::MspeP,
        Criterion::MspeD,
        Criterion::MspebY,
        Criterion::MspebP,
        Criterion::MspebD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::MspeY => "MSPE_Y",
            Criterion::MspeP => "MSPE_P",
            Criterion::MspeD => "MSPE_D",
            Criterion::MspebY => "MSPEB_Y",
            Criterion::MspebP => "MSPEB_P",
            Criterion::MspebD => "MSPEB_D",
        }
    }

    /// The unpenalised criterion behind an MSPEB criterion (identity otherwise).
    pub fn unpenalized(self) -> Criterion {
        match self {
            Criterion::MspebY => Criterion::MspeY,
            Criterion::MspebP => Criterion::MspeP,
            Criterion::MspebD => Criterion::MspeD,
            other => other,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_uppercase().replace(['-', ' '], "_");
        Criterion::ALL
            .into_iter()
            .find(|c| c.name() == norm)
            .ok_or_else(|| Error::Validation(format!("unknown criterion `{s}`")))
    }
}

/// Estimated criteria of one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionRow {
    pub c: usize,
    pub assignment: ClusterAssignment,
    pub mspe_y_hat: f64,
    pub mspe_p_hat: f64,
    pub mspe_d_hat: f64,
    pub pcp_hat: f64,
    pub mspeb_y_hat: f64,
    pub mspeb_p_hat: f64,
    pub mspeb_d_hat: f64,
    pub feasible: bool,
}

impl CriterionRow {
    pub fn value(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::MspeY => self.mspe_y_hat,
            Criterion::MspeP => self.mspe_p_hat,
            Criterion::MspeD => self.mspe_d_hat,
            Criterion::MspebY => self.mspeb_y_hat,
            Criterion::MspebP => self.mspeb_p_hat,
            Criterion::MspebD => self.mspeb_d_hat,
        }
    }
}

/// `ln(mspe) + c ln(M) / M`.
pub fn mspeb(mspe: f64, c: usize, m: usize) -> f64 {
    mspe.ln() + c as f64 * (m as f64).ln() / m as f64
}

/// Diagonal of the reduced-design hat matrix.
pub fn leverage(design: &DesignMatrix, g: &ClusterAssignment) -> Vec<f64> {
    LeastSquares::new(&design.reduced(g)).leverages()
}

/// Held-out predictions for every match of `design` under `model`'s clustering.
pub fn loo_predictions(model: &ClusteredModel, design: &DesignMatrix) -> Result<LooSet> {
    let (refit, reduced) = fit_factored(design, model.assignment())?;
    Ok(loo_from_fit(&refit, &reduced, design))
}

pub(crate) fn loo_from_fit(model: &ClusteredModel, reduced: &ReducedFit, design: &DesignMatrix) -> LooSet {
    let m = design.m();
    let assignment = model.assignment().clone();
    let h = reduced.ls.leverages();
    if m < 2 || h.iter().any(|&hs| hs >= 1.0 - LEVERAGE_TOL) {
        let records = h
            .iter()
            .map(|&leverage| LooRecord { leverage, y_loo: f64::NAN, p_loo: f64::NAN, d_loo: f64::NAN })
            .collect();
        return LooSet { assignment, records, feasible: false };
    }

    let y = design.y();
    let scale = y.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let floor = EXACT_FIT_TOL * scale;
    let snap = |v: f64| if v.abs() <= floor { 0.0 } else { v };
    let e = model.residuals();
    let hat = reduced.ls.hat();

    let mut records = Vec::with_capacity(m);
    for s in 0..m {
        let r = snap(e[s]) / (1.0 - h[s]);
        let y_loo = snap(y[s] - r);
        let threshold = -y_loo;
        let mut below = 0usize;
        for t in (0..m).filter(|&t| t != s) {
            if snap(e[t] + hat[(t, s)] * r) <= threshold {
                below += 1;
            }
        }
        let p_loo = 1.0 - below as f64 / (m - 1) as f64;
        records.push(LooRecord { leverage: h[s], y_loo, p_loo, d_loo: outcome_from_prob(p_loo) });
    }
    LooSet { assignment, records, feasible: true }
}

/// Aggregates LOO records into the six criteria.
pub fn mspe_hats(loo: &LooSet, design: &DesignMatrix) -> CriterionRow {
    let c = loo.assignment.count();
    if !loo.feasible || loo.records.len() != design.m() {
        return CriterionRow {
            c,
            assignment: loo.assignment.clone(),
            mspe_y_hat: f64::INFINITY,
            mspe_p_hat: f64::INFINITY,
            mspe_d_hat: f64::INFINITY,
            pcp_hat: f64::NEG_INFINITY,
            mspeb_y_hat: f64::INFINITY,
            mspeb_p_hat: f64::INFINITY,
            mspeb_d_hat: f64::INFINITY,
            feasible: false,
        };
    }
    let m = design.m();
    let (mut sy, mut sp, mut sd) = (0.0, 0.0, 0.0);
    for (s, rec) in loo.records.iter().enumerate() {
        let ds = design.d()[s];
        sy += (design.y()[s] - rec.y_loo).powi(2);
        sp += (ds - rec.p_loo).powi(2);
        sd += (ds - rec.d_loo).powi(2);
    }
    let mf = m as f64;
    let (mspe_y_hat, mspe_p_hat, mspe_d_hat) = (sy / mf, sp / mf, sd / mf);
    CriterionRow {
        c,
        assignment: loo.assignment.clone(),
        mspe_y_hat,
        mspe_p_hat,
        mspe_d_hat,
        pcp_hat: 1.0 - mspe_d_hat,
        mspeb_y_hat: mspeb(mspe_y_hat, c, m),
        mspeb_p_hat: mspeb(mspe_p_hat, c, m),
        mspeb_d_hat: mspeb(mspe_d_hat, c, m),
        feasible: true,
    }
}

/// Fit plus criteria for one clustering, sharing a single factorisation.
pub(crate) fn evaluate(design: &DesignMatrix, g: &ClusterAssignment) -> Result<(ClusteredModel, CriterionRow, ReducedFit)> {
    let (model, reduced) = fit_factored(design, g)?;
    let loo = loo_from_fit(&model, &reduced, design);
    let row = mspe_hats(&loo, design);
    Ok((model, row, reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_design, MatchRecord, RobotRoster};
    use crate::model::fit_wmprc;

    fn roster6() -> RobotRoster {
        RobotRoster::new(["A", "B", "C", "D", "E", "F"]).unwrap()
    }

    #[test]
    fn single_match_has_unit_leverage() {
        let m = MatchRecord::new("qm1", ["A", "B", "C"], ["D", "E", "F"], 30, 21);
        let d = build_design(&[m], &roster6()).unwrap();
        let g = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        assert!((leverage(&d, &g)[0] - 1.0).abs() < 1e-12);
        let model = fit_wmprc(&d, &g).unwrap();
        let loo = loo_predictions(&model, &d).unwrap();
        assert!(!loo.feasible);
        let row = mspe_hats(&loo, &d);
        assert!(!row.feasible && row.mspeb_d_hat == f64::INFINITY);
    }

    #[test]
    fn duplicated_match() {
        let ms = vec![
            MatchRecord::new("qm1", ["A", "B", "C"], ["D", "E", "F"], 30, 21),
            MatchRecord::new("qm2", ["A", "B", "C"], ["D", "E", "F"], 30, 21),
        ];
        let d = build_design(&ms, &roster6()).unwrap();
        let g = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let h = leverage(&d, &g);
        assert!((h[0] - 0.5).abs() < 1e-12 && (h[1] - 0.5).abs() < 1e-12);
        let model = fit_wmprc(&d, &g).unwrap();
        let loo = loo_predictions(&model, &d).unwrap();
        assert!(loo.feasible);
        for r in &loo.records {
            assert!((r.y_loo - 9.0).abs() < 1e-12);
            assert_eq!(r.p_loo, 1.0);
        }
        let row = mspe_hats(&loo, &d);
        assert!(row.mspe_y_hat < 1e-20);
        assert_eq!(row.mspe_d_hat, 0.0);
        assert_eq!(row.pcp_hat, 1.0);
    }

    #[test]
    fn mspeb_arithmetic() {
        assert!((mspeb(1.0, 2, 100) - 0.092_103_4).abs() < 1e-7);
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(c.name().parse::<Criterion>().unwrap(), c);
        }
        assert_eq!("mspeb-d".parse::<Criterion>().unwrap(), Criterion::MspebD);
        assert!("mspe_q".parse::<Criterion>().is_err());
    }
}
