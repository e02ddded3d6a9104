//! Replication experiments.

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{generate_candidates_with, ChainOptions, Method};
use crate::crossval::{evaluate, Criterion, CriterionRow};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::indices::{minr_vs_truth, rank_correlation_vs_truth};
use crate::model::{ClusterAssignment, ClusteredModel};
use crate::selection::select_candidate;
use crate::simulator::oracle::{mse_strengths, oracle_mspe};
use crate::simulator::rng::stream;
use crate::simulator::scenario::{generate_y, TruthSpec};

/// Label of the row fitted with one cluster per robot.
pub const WMPR_ROW: &str = "WMPR";
/// Label of the row fitted with the true clustering.
pub const ORACLE_ROW: &str = "ORACLE_G";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub reps: usize,
    pub methods: Vec<Method>,
    pub criteria: Vec<Criterion>,
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub chain: ChainOptions,
}

impl ExperimentSpec {
    pub fn new(reps: usize, methods: Vec<Method>, master_seed: u64) -> Self {
        ExperimentSpec {
            reps,
            methods,
            criteria: Criterion::ALL.to_vec(),
            master_seed,
            threads: None,
            chain: ChainOptions::default(),
        }
    }
}

/// Aggregates for one method and criterion (or one fixed baseline fit).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub criterion: String,
    pub mean_c: f64,
    pub sd_c: f64,
    pub mse: f64,
    pub minr: f64,
    pub rc: f64,
    pub oracle_mspe_y: f64,
    pub oracle_mspe_p: f64,
    pub oracle_mspe_d: f64,
    pub est_mspe_y: f64,
    pub est_mspe_p: f64,
    pub est_mspe_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub scenario: String,
    pub sigma: f64,
    pub c_o: usize,
    pub robots: usize,
    pub matches: usize,
    pub reps: usize,
    pub master_seed: u64,
    pub rows: Vec<SummaryRow>,
}

impl ExperimentSummary {
    pub fn row(&self, method: &str, criterion: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.method == method && r.criterion == criterion)
    }
}

/// Per-replication values of one summary row, in `SummaryRow` field order.
type Metrics = [f64; 10];

fn metrics(model: &ClusteredModel, row: &CriterionRow, truth: &TruthSpec, design: &DesignMatrix) -> Result<Metrics> {
    let o = oracle_mspe(model, truth, design)?;
    Ok([
        model.clusters() as f64,
        mse_strengths(model, truth)?,
        minr_vs_truth(model, truth)?,
        rank_correlation_vs_truth(model, truth)?,
        o.y,
        o.p,
        o.d,
        row.mspe_y_hat,
        row.mspe_p_hat,
        row.mspe_d_hat,
    ])
}

fn replicate(truth: &TruthSpec, design: &DesignMatrix, spec: &ExperimentSpec, rep: usize) -> Result<Vec<Metrics>> {
    let y = generate_y(truth, design, &mut stream(spec.master_seed, rep as u64));
    let sample = design.with_response(y);
    let mut out = Vec::with_capacity(2 + spec.methods.len() * spec.criteria.len());

    let (wmpr, wmpr_row, _) = evaluate(&sample, &ClusterAssignment::singletons(design.k()))?;
    out.push(metrics(&wmpr, &wmpr_row, truth, design)?);
    let (oracle, oracle_row, _) = evaluate(&sample, truth.assignment())?;
    out.push(metrics(&oracle, &oracle_row, truth, design)?);

    for &method in &spec.methods {
        let chain = generate_candidates_with(&sample, method, &spec.chain)?;
        for &criterion in &spec.criteria {
            let chosen = select_candidate(&chain, criterion)?;
            out.push(metrics(&chosen.model, &chosen.row, truth, design)?);
        }
    }
    Ok(out)
}

/// Runs `spec.reps` replications and aggregates them in replication order,
/// so the summary does not depend on the number of threads.
pub fn run_experiment(truth: &TruthSpec, design: &DesignMatrix, spec: &ExperimentSpec) -> Result<ExperimentSummary> {
    if spec.reps == 0 {
        return Err(Error::Validation("experiment needs at least one replication".into()));
    }
    if design.k() != truth.robots() {
        return Err(Error::Validation(format!(
            "truth covers {} robots, schedule {}",
            truth.robots(),
            design.k()
        )));
    }
    let work = || -> Result<Vec<Vec<Metrics>>> {
        (0..spec.reps).into_par_iter().map(|r| replicate(truth, design, spec, r)).collect()
    };
    let per_rep = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let mut labels = vec![(WMPR_ROW.to_owned(), "-".to_owned()), (ORACLE_ROW.to_owned(), "-".to_owned())];
    for m in &spec.methods {
        for c in &spec.criteria {
            labels.push((m.name().to_owned(), c.name().to_owned()));
        }
    }
    let n = spec.reps as f64;
    let rows = labels
        .into_iter()
        .enumerate()
        .map(|(j, (method, criterion))| {
            let mut sums = [0.0; 10];
            for rep in &per_rep {
                for (acc, v) in sums.iter_mut().zip(rep[j]) {
                    *acc += v;
                }
            }
            let means = sums.map(|s| s / n);
            let sd_c = if spec.reps < 2 {
                0.0
            } else {
                let ss: f64 = per_rep.iter().map(|rep| (rep[j][0] - means[0]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            };
            SummaryRow {
                method,
                criterion,
                mean_c: means[0],
                sd_c,
                mse: means[1],
                minr: means[2],
                rc: means[3],
                oracle_mspe_y: means[4],
                oracle_mspe_p: means[5],
                oracle_mspe_d: means[6],
                est_mspe_y: means[7],
                est_mspe_p: means[8],
                est_mspe_d: means[9],
            }
        })
        .collect();

    Ok(ExperimentSummary {
        scenario: truth.name().to_owned(),
        sigma: truth.sigma(),
        c_o: truth.c_o(),
        robots: design.k(),
        matches: design.m(),
        reps: spec.reps,
        master_seed: spec.master_seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::scenario::{make_scenario, BaseScenario};
    use crate::simulator::schedule::synthetic_design;

    #[test]
    fn noiseless_replication_recovers_truth() {
        let (_, d) = synthetic_design(67, 112, 21).unwrap();
        let truth = make_scenario(BaseScenario::M1, 0.0, &d).unwrap();
        let mut spec = ExperimentSpec::new(1, vec![Method::Tcl], 5);
        spec.threads = Some(1);
        let summary = run_experiment(&truth, &d, &spec).unwrap();
        for row in summary.rows.iter().filter(|r| r.method != WMPR_ROW) {
            assert_eq!(row.mean_c, 4.0, "{} {}", row.method, row.criterion);
            assert!(row.mse < 1e-16, "{} {}: mse {}", row.method, row.criterion, row.mse);
            assert_eq!(row.minr, 1.0);
            assert_eq!(row.rc, 1.0);
        }
    }
}
