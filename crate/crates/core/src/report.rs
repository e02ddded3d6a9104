//! Versioned output formats: model JSON, criterion CSV, experiment summaries.
//!
//! Non-finite numbers are written as the strings `"inf"`, `"-inf"` and
//! `"nan"` in JSON and as `inf`, `-inf`, `nan` in CSV.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crossval::{Criterion, CriterionRow};
use crate::design::RobotRoster;
use crate::error::{Error, Result};
use crate::model::{ClusterAssignment, ClusteredModel};
use crate::simulator::ExperimentSummary;
use crate::TOOL_VERSION;

pub const MODEL_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Hex SHA-256 of `bytes`.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-tripping decimal form, with the non-finite spellings.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub mod nonfinite {
    //! Serde adapter for `f64` fields that may be infinite or NaN.

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::fmt_f64(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("`{other}` is not a number"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionEntry {
    pub c: usize,
    pub feasible: bool,
    #[serde(with = "nonfinite")]
    pub mspe_y: f64,
    #[serde(with = "nonfinite")]
    pub mspe_p: f64,
    #[serde(with = "nonfinite")]
    pub mspe_d: f64,
    #[serde(with = "nonfinite")]
    pub pcp: f64,
    #[serde(with = "nonfinite")]
    pub mspeb_y: f64,
    #[serde(with = "nonfinite")]
    pub mspeb_p: f64,
    #[serde(with = "nonfinite")]
    pub mspeb_d: f64,
}

impl From<&CriterionRow> for CriterionEntry {
    fn from(r: &CriterionRow) -> Self {
        CriterionEntry {
            c: r.c,
            feasible: r.feasible,
            mspe_y: r.mspe_y_hat,
            mspe_p: r.mspe_p_hat,
            mspe_d: r.mspe_d_hat,
            pcp: r.pcp_hat,
            mspeb_y: r.mspeb_y_hat,
            mspeb_p: r.mspeb_p_hat,
            mspeb_d: r.mspeb_d_hat,
        }
    }
}

/// A fitted model as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub tool_version: String,
    pub input_digest: String,
    pub seed: u64,
    pub event: String,
    pub method: String,
    pub criterion: String,
    pub c: usize,
    pub roster: Vec<String>,
    /// 1-based cluster of every robot, clusters in ascending strength.
    pub assignment: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub residuals: Vec<f64>,
    pub excluded: Vec<String>,
    pub criteria: Vec<CriterionEntry>,
}

impl ModelFile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: &ClusteredModel,
        roster: &RobotRoster,
        table: &[CriterionRow],
        event: &str,
        method: &str,
        criterion: Option<Criterion>,
        input_digest: &str,
        seed: u64,
        excluded: &[String],
    ) -> Self {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_owned(),
            input_digest: input_digest.to_owned(),
            seed,
            event: event.to_owned(),
            method: method.to_owned(),
            criterion: criterion.map_or_else(|| "-".to_owned(), |c| c.name().to_owned()),
            c: model.clusters(),
            roster: roster.ids().to_vec(),
            assignment: model.assignment().labels().iter().map(|l| l + 1).collect(),
            cluster_sizes: model.assignment().sizes(),
            theta: model.theta().to_vec(),
            beta: model.beta().to_vec(),
            residuals: model.residuals().to_vec(),
            excluded: excluded.to_vec(),
            criteria: table.iter().map(CriterionEntry::from).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "model schema version {} not supported (expected {MODEL_SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        if file.assignment.len() != file.roster.len() {
            return Err(Error::Validation("model assignment and roster lengths differ".into()));
        }
        Ok(file)
    }

    pub fn model(&self) -> Result<ClusteredModel> {
        if self.assignment.contains(&0) {
            return Err(Error::Validation("model assignment labels are 1-based".into()));
        }
        let g = ClusterAssignment::new(self.assignment.iter().map(|l| l - 1).collect(), self.c)?;
        ClusteredModel::from_parts(g, self.theta.clone(), self.residuals.clone())
    }

    pub fn roster(&self) -> Result<RobotRoster> {
        RobotRoster::new(self.roster.iter().cloned())
    }
}

pub const CRITERIA_CSV_HEADER: &str = "c,feasible,mspe_y,mspe_p,mspe_d,pcp,mspeb_y,mspeb_p,mspeb_d";

/// One row per candidate, descending `c`.
pub fn criteria_csv(table: &[CriterionRow]) -> String {
    let mut rows: Vec<&CriterionRow> = table.iter().collect();
    rows.sort_by(|a, b| b.c.cmp(&a.c));
    let mut out = String::from(CRITERIA_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let vals = [
            r.mspe_y_hat,
            r.mspe_p_hat,
            r.mspe_d_hat,
            r.pcp_hat,
            r.mspeb_y_hat,
            r.mspeb_p_hat,
            r.mspeb_d_hat,
        ]
        .map(fmt_f64);
        let _ = writeln!(out, "{},{},{}", r.c, r.feasible, vals.join(","));
    }
    out
}

pub const SUMMARY_CSV_HEADER: &str = "method,criterion,mean_c,sd_c,mse,minr,rc,oracle_mspe_y,oracle_mspe_p,oracle_mspe_d,est_mspe_y,est_mspe_p,est_mspe_d";

pub fn summary_csv(summary: &ExperimentSummary) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in &summary.rows {
        let vals = [
            r.mean_c,
            r.sd_c,
            r.mse,
            r.minr,
            r.rc,
            r.oracle_mspe_y,
            r.oracle_mspe_p,
            r.oracle_mspe_d,
            r.est_mspe_y,
            r.est_mspe_p,
            r.est_mspe_d,
        ]
        .map(fmt_f64);
        let _ = writeln!(out, "{},{},{}", r.method, r.criterion, vals.join(","));
    }
    out
}

/// Run metadata written next to a summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryMetadata {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_digest: String,
    pub schedule_digest: String,
    /// `"file"` for a real schedule, `"synthetic"` otherwise.
    pub schedule_source: String,
    pub sigma_multiplier: f64,
    pub methods: Vec<String>,
    pub criteria: Vec<String>,
    pub epsilon: f64,
    pub max_iter: usize,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    metadata: &'a SummaryMetadata,
    summary: SummaryView<'a>,
}

#[derive(Serialize)]
struct SummaryView<'a> {
    scenario: &'a str,
    sigma: f64,
    c_o: usize,
    robots: usize,
    matches: usize,
    reps: usize,
    master_seed: u64,
    rows: Vec<RowView<'a>>,
}

#[derive(Serialize)]
struct RowView<'a> {
    method: &'a str,
    criterion: &'a str,
    #[serde(with = "nonfinite")]
    mean_c: f64,
    #[serde(with = "nonfinite")]
    sd_c: f64,
    #[serde(with = "nonfinite")]
    mse: f64,
    #[serde(with = "nonfinite")]
    minr: f64,
    #[serde(with = "nonfinite")]
    rc: f64,
    #[serde(with = "nonfinite")]
    oracle_mspe_y: f64,
    #[serde(with = "nonfinite")]
    oracle_mspe_p: f64,
    #[serde(with = "nonfinite")]
    oracle_mspe_d: f64,
    #[serde(with = "nonfinite")]
    est_mspe_y: f64,
    #[serde(with = "nonfinite")]
    est_mspe_p: f64,
    #[serde(with = "nonfinite")]
    est_mspe_d: f64,
}

pub fn summary_json(summary: &ExperimentSummary, meta: &SummaryMetadata) -> Result<String> {
    let rows = summary
        .rows
        .iter()
        .map(|r| RowView {
            method: &r.method,
            criterion: &r.criterion,
            mean_c: r.mean_c,
            sd_c: r.sd_c,
            mse: r.mse,
            minr: r.minr,
            rc: r.rc,
            oracle_mspe_y: r.oracle_mspe_y,
            oracle_mspe_p: r.oracle_mspe_p,
            oracle_mspe_d: r.oracle_mspe_d,
            est_mspe_y: r.est_mspe_y,
            est_mspe_p: r.est_mspe_p,
            est_mspe_d: r.est_mspe_d,
        })
        .collect();
    let view = SummaryJson {
        metadata: meta,
        summary: SummaryView {
            scenario: &summary.scenario,
            sigma: summary.sigma,
            c_o: summary.c_o,
            robots: summary.robots,
            matches: summary.matches,
            reps: summary.reps,
            master_seed: summary.master_seed,
            rows,
        },
    };
    let mut s = serde_json::to_string_pretty(&view)?;
    s.push('\n');
    Ok(s)
}
