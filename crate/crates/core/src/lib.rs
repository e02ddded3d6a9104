//! Latent-cluster strength estimation for three-on-three alliance matches.
//!
//! Robots share cluster-level strengths and the score difference of a match
//! is modelled as the red alliance's total strength minus the blue
//! alliance's total strength plus noise. Candidate clusterings for every
//! cluster count are produced by hierarchical merging (optionally combined
//! with a non-hierarchical reassignment pass) and the final model is chosen
//! with leave-one-out prediction criteria.
//!
//! The crate is organised bottom-up:
//!
//! * [`design`]: match records, rosters and the `{-1, 0, +1}` design matrix.
//! * [`model`]: constrained least-squares fits and predictors.
//! * [`crossval`]: leave-one-out estimates of the prediction errors.
//! * [`clustering`]: centroid linkage, merging, reassignment and candidate chains.
//! * [`selection`]: choosing a candidate under one of six criteria.
//! * [`indices`]: nested-relation and rank-correlation indices.
//! * [`simulator`]: seeded replication experiments with closed-form oracles.
//! * [`ingest`]: CSV files and The Blue Alliance API.
//! * [`report`]: versioned JSON/CSV output formats.

pub mod clustering;
pub mod crossval;
pub mod design;
pub mod error;
pub mod indices;
pub mod ingest;
pub mod linalg;
pub mod model;
pub mod report;
pub mod selection;
pub mod simulator;
pub mod trace;

pub use clustering::{
    breakout_strengths, centroid_linkage, generate_candidates, generate_candidates_with,
    merge_closest, refine_nonhierarchical, Candidate, CandidateChain, ChainOptions, Method,
    RefinementTrace, StepOrigin,
};
pub use crossval::{leverage, loo_predictions, mspe_hats, Criterion, CriterionRow, LooRecord, LooSet};
pub use design::{build_design, DesignMatrix, MatchRecord, RobotRoster};
pub use error::{Error, Result};
pub use indices::{
    classify_strength, minr, minr_vs_truth, rank_correlation, rank_correlation_vs_truth,
    StrengthLabel,
};
pub use ingest::EventDataset;
pub use model::{
    fit_wmprc, predict_outcome, predict_prob, predict_score, ClusterAssignment, ClusteredModel,
    EmpiricalCdf,
};
pub use selection::{select, SelectionResult};
pub use simulator::{ExperimentSummary, TruthSpec};

/// Version string embedded in every emitted file.
pub const TOOL_VERSION: &str = concat!("wmprc ", env!("CARGO_PKG_VERSION"));
