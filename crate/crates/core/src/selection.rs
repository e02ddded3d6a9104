//! Choosing a candidate from a chain under one criterion.

use crate::clustering::{Candidate, CandidateChain};
use crate::crossval::{Criterion, CriterionRow};
use crate::error::{Error, Result};
use crate::model::ClusteredModel;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub criterion: Criterion,
    pub c: usize,
    pub model: ClusteredModel,
    /// Criterion rows of the whole chain, ordered by descending `c`.
    pub table: Vec<CriterionRow>,
}

/// Position of the feasible row minimising `criterion`, ties to the smallest `c`.
pub fn argmin_row(rows: &[&CriterionRow], criterion: Criterion) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (p, row) in rows.iter().enumerate() {
        let v = row.value(criterion);
        if !row.feasible || v.is_nan() || v == f64::INFINITY {
            continue;
        }
        best = match best {
            None => Some(p),
            Some(b) => {
                let bv = rows[b].value(criterion);
                if v < bv || (v == bv && row.c < rows[b].c) {
                    Some(p)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

pub fn select(chain: &CandidateChain, criterion: Criterion) -> Result<SelectionResult> {
    let chosen = select_candidate(chain, criterion)?;
    let mut table: Vec<CriterionRow> = chain.candidates.iter().map(|c| c.row.clone()).collect();
    table.sort_by(|a, b| b.c.cmp(&a.c));
    Ok(SelectionResult { criterion, c: chosen.c, model: chosen.model.clone(), table })
}

/// The selected candidate itself, without copying the table.
pub fn select_candidate(chain: &CandidateChain, criterion: Criterion) -> Result<&Candidate> {
    let rows = chain.rows();
    let p = argmin_row(&rows, criterion).ok_or_else(|| {
        Error::Selection(format!(
            "no feasible candidate for {criterion}: every one of {} candidates has a held-out match of leverage 1",
            rows.len()
        ))
    })?;
    Ok(&chain.candidates[p])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClusterAssignment;

    fn row(c: usize, v: f64) -> CriterionRow {
        CriterionRow {
            c,
            assignment: ClusterAssignment::single(1),
            mspe_y_hat: v,
            mspe_p_hat: v,
            mspe_d_hat: v,
            pcp_hat: 1.0 - v,
            mspeb_y_hat: v,
            mspeb_p_hat: v,
            mspeb_d_hat: v,
            feasible: v.is_finite(),
        }
    }

    #[test]
    fn u_shape_minimum() {
        let rows = [row(6, 5.0), row(5, 3.0), row(4, 1.0), row(3, 2.0), row(2, 4.0)];
        let refs: Vec<&CriterionRow> = rows.iter().collect();
        assert_eq!(argmin_row(&refs, Criterion::MspebD), Some(2));
    }

    #[test]
    fn ties_go_to_fewer_clusters() {
        let rows = [row(5, 1.0), row(3, 1.0), row(4, 1.0)];
        let refs: Vec<&CriterionRow> = rows.iter().collect();
        assert_eq!(refs[argmin_row(&refs, Criterion::MspeD).unwrap()].c, 3);
    }

    #[test]
    fn infeasible_rows_skipped() {
        let rows = [row(3, f64::INFINITY), row(2, 7.0)];
        let refs: Vec<&CriterionRow> = rows.iter().collect();
        assert_eq!(argmin_row(&refs, Criterion::MspeY), Some(1));
        let rows = [row(3, f64::INFINITY)];
        let refs: Vec<&CriterionRow> = rows.iter().collect();
        assert_eq!(argmin_row(&refs, Criterion::MspeY), None);
    }
}
