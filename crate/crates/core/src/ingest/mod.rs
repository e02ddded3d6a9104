//! Loading match data from CSV files and The Blue Alliance.

pub mod csv;
pub mod import;
pub mod tba;

use std::collections::HashSet;

use crate::design::{build_design, natural_cmp, DesignMatrix, MatchRecord, RobotRoster};
use crate::error::{Error, Result};

pub use self::csv::{read_matches_csv, write_matches_csv, CSV_HEADER};
pub use self::tba::{fetch_event_matches, TbaClient, TBA_BASE_URL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Csv,
    Api,
    Cache,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Csv => "csv",
            Source::Api => "api",
            Source::Cache => "cache",
        }
    }
}

/// Qualification matches of one event after exclusions.
#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    pub event: String,
    pub matches: Vec<MatchRecord>,
    pub roster: RobotRoster,
    pub excluded: Vec<String>,
    pub source: Source,
}

fn match_order(a: &MatchRecord, b: &MatchRecord) -> std::cmp::Ordering {
    a.match_number()
        .cmp(&b.match_number())
        .then_with(|| natural_cmp(&a.match_id, &b.match_id))
}

impl EventDataset {
    /// Validates and sorts `matches`, then drops the listed match ids.
    /// Listing an id that is not present is an error.
    pub fn new(event: impl Into<String>, mut matches: Vec<MatchRecord>, exclude: &[String], source: Source) -> Result<Self> {
        let mut seen = HashSet::new();
        for m in &matches {
            m.validate()?;
            if !seen.insert(m.match_id.as_str()) {
                return Err(Error::Validation(format!("duplicate match id `{}`", m.match_id)));
            }
        }
        for id in exclude {
            if !seen.contains(id.as_str()) {
                return Err(Error::Validation(format!("excluded match `{id}` is not in the data")));
            }
        }
        matches.retain(|m| !exclude.contains(&m.match_id));
        if matches.is_empty() {
            return Err(Error::EmptyDataset);
        }
        matches.sort_by(match_order);
        let roster = RobotRoster::from_matches(&matches);
        let mut excluded = exclude.to_vec();
        excluded.sort_by(|a, b| natural_cmp(a, b));
        excluded.dedup();
        Ok(EventDataset { event: event.into(), matches, roster, excluded, source })
    }

    pub fn design(&self) -> Result<DesignMatrix> {
        build_design(&self.matches, &self.roster)
    }

    /// Same data under a new exclusion list applied on top of this one.
    pub fn excluding(&self, exclude: &[String]) -> Result<Self> {
        let mut ds = EventDataset::new(self.event.clone(), self.matches.clone(), exclude, self.source)?;
        ds.excluded.extend(self.excluded.iter().cloned());
        ds.excluded.sort_by(|a, b| natural_cmp(a, b));
        ds.excluded.dedup();
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(id: &str, a: &str) -> MatchRecord {
        MatchRecord::new(id, [a, "b", "c"], ["d", "e", "f"], 10, 5)
    }

    #[test]
    fn sorts_and_excludes() {
        let ds = EventDataset::new("ev", vec![m("qm10", "a"), m("qm2", "a"), m("qm1", "z")], &["qm1".into()], Source::Csv).unwrap();
        let ids: Vec<&str> = ds.matches.iter().map(|m| m.match_id.as_str()).collect();
        assert_eq!(ids, vec!["qm2", "qm10"]);
        assert_eq!(ds.roster.len(), 6);
        assert_eq!(ds.roster.index_of("z"), None);
    }

    #[test]
    fn rejects_duplicates_unknown_exclusions_and_empty() {
        assert!(EventDataset::new("ev", vec![m("qm1", "a"), m("qm1", "a")], &[], Source::Csv).is_err());
        assert!(EventDataset::new("ev", vec![m("qm1", "a")], &["qm9".into()], Source::Csv).is_err());
        assert!(matches!(
            EventDataset::new("ev", vec![m("qm1", "a")], &["qm1".into()], Source::Csv),
            Err(Error::EmptyDataset)
        ));
    }
}
