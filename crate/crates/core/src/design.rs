//! Match records, robot rosters and the alliance design matrix.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClusterAssignment;

/// One qualification match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub red: [String; 3],
    pub blue: [String; 3],
    pub red_score: u32,
    pub blue_score: u32,
}

impl MatchRecord {
    pub fn new(
        match_id: impl Into<String>,
        red: [&str; 3],
        blue: [&str; 3],
        red_score: u32,
        blue_score: u32,
    ) -> Self {
        MatchRecord {
            match_id: match_id.into(),
            red: red.map(str::to_owned),
            blue: blue.map(str::to_owned),
            red_score,
            blue_score,
        }
    }

    /// Checks that the six robots are distinct.
    pub fn validate(&self) -> Result<()> {
        let robots: Vec<&String> = self.red.iter().chain(self.blue.iter()).collect();
        for (i, a) in robots.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::Validation(format!(
                    "match {}: empty robot identifier",
                    self.match_id
                )));
            }
            if robots[i + 1..].contains(a) {
                return Err(Error::Validation(format!(
                    "match {}: robot `{a}` appears twice",
                    self.match_id
                )));
            }
        }
        Ok(())
    }

    /// Red score minus blue score.
    pub fn score_diff(&self) -> f64 {
        f64::from(self.red_score) - f64::from(self.blue_score)
    }

    /// Trailing integer of the match identifier (`qm12` -> 12).
    pub fn match_number(&self) -> Option<u64> {
        trailing_number(&self.match_id).map(|(_, n)| n)
    }
}

fn trailing_number(s: &str) -> Option<(&str, u64)> {
    let split = s
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_digit())
        .last()
        .map(|(i, _)| i)?;
    s[split..].parse().ok().map(|n| (&s[..split], n))
}

/// Ordering used for team keys: `frc9` sorts before `frc10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (trailing_number(a), trailing_number(b)) {
        (Some((pa, na)), Some((pb, nb))) => pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// Outcome coding of a score difference: win 1, tie 0.5, loss 0.
pub fn outcome(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Ordered robot identifiers and their column indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RobotRoster {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl RobotRoster {
    pub fn new<I, S>(ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate robot `{id}` in roster")));
            }
        }
        Ok(RobotRoster { ids, index })
    }

    /// Every robot appearing in `matches`, naturally sorted.
    pub fn from_matches(matches: &[MatchRecord]) -> Self {
        let mut ids: Vec<String> = matches
            .iter()
            .flat_map(|m| m.red.iter().chain(m.blue.iter()).cloned())
            .collect();
        ids.sort_by(|a, b| natural_cmp(a, b));
        ids.dedup();
        RobotRoster::new(ids).expect("deduplicated")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

/// Alliance design of `M` matches over `K` robots, with responses.
///
/// Row `s` has `+1` for the red robots, `-1` for the blue robots and `0`
/// elsewhere; `y[s]` is the score difference and `d[s]` its outcome code.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    y: DVector<f64>,
    d: Vec<f64>,
    alliances: Vec<([usize; 3], [usize; 3])>,
}

pub fn build_design(matches: &[MatchRecord], roster: &RobotRoster) -> Result<DesignMatrix> {
    if matches.is_empty() {
        return Err(Error::Validation("design needs at least one match".into()));
    }
    let mut alliances = Vec::with_capacity(matches.len());
    for m in matches {
        m.validate()?;
        let lookup = |id: &String| {
            roster.index_of(id).ok_or_else(|| Error::UnknownRobot {
                match_id: m.match_id.clone(),
                robot: id.clone(),
            })
        };
        let red = [lookup(&m.red[0])?, lookup(&m.red[1])?, lookup(&m.red[2])?];
        let blue = [lookup(&m.blue[0])?, lookup(&m.blue[1])?, lookup(&m.blue[2])?];
        alliances.push((red, blue));
    }
    let y = DVector::from_iterator(matches.len(), matches.iter().map(MatchRecord::score_diff));
    DesignMatrix::from_alliances(roster.len(), alliances, y)
}

impl DesignMatrix {
    /// Builds a design from per-match robot indices.
    pub fn from_alliances(
        k: usize,
        alliances: Vec<([usize; 3], [usize; 3])>,
        y: DVector<f64>,
    ) -> Result<Self> {
        if alliances.len() != y.len() {
            return Err(Error::Validation(format!(
                "{} alliance rows but {} responses",
                alliances.len(),
                y.len()
            )));
        }
        let mut x = DMatrix::zeros(alliances.len(), k);
        for (s, (red, blue)) in alliances.iter().enumerate() {
            for &i in red.iter().chain(blue.iter()) {
                if i >= k {
                    return Err(Error::Validation(format!("match row {s}: robot index {i} >= {k}")));
                }
                if x[(s, i)] != 0.0 {
                    return Err(Error::Validation(format!("match row {s}: robot {i} appears twice")));
                }
                x[(s, i)] = if red.contains(&i) { 1.0 } else { -1.0 };
            }
        }
        let d = y.iter().copied().map(outcome).collect();
        Ok(DesignMatrix { x, y, d, alliances })
    }

    /// Same schedule with a new response vector.
    pub fn with_response(&self, y: DVector<f64>) -> Self {
        assert_eq!(y.len(), self.m(), "response length must equal match count");
        let d = y.iter().copied().map(outcome).collect();
        DesignMatrix {
            x: self.x.clone(),
            y,
            d,
            alliances: self.alliances.clone(),
        }
    }

    /// The design with match `s` deleted.
    pub fn without_match(&self, s: usize) -> Self {
        let x = self.x.clone().remove_row(s);
        let y = self.y.clone().remove_row(s);
        let mut d = self.d.clone();
        d.remove(s);
        let mut alliances = self.alliances.clone();
        alliances.remove(s);
        DesignMatrix { x, y, d, alliances }
    }

    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn alliances(&self) -> &[([usize; 3], [usize; 3])] {
        &self.alliances
    }

    pub fn row(&self, s: usize) -> Vec<f64> {
        self.x.row(s).iter().copied().collect()
    }

    /// Cluster-collapsed design `X Z` (M x c).
    pub fn reduced(&self, g: &ClusterAssignment) -> DMatrix<f64> {
        let labels = g.labels();
        let mut xr = DMatrix::zeros(self.m(), g.count());
        for (s, (red, blue)) in self.alliances.iter().enumerate() {
            for &i in red {
                xr[(s, labels[i])] += 1.0;
            }
            for &i in blue {
                xr[(s, labels[i])] -= 1.0;
            }
        }
        xr
    }
}

/// Validates a hypothetical design row: `K` entries, three `+1`, three `-1`.
pub fn check_row(x: &[f64], k: usize) -> Result<()> {
    if x.len() != k {
        return Err(Error::Validation(format!("design row has {} entries, expected {k}", x.len())));
    }
    let (mut pos, mut neg) = (0, 0);
    for &v in x {
        match v {
            v if v == 1.0 => pos += 1,
            v if v == -1.0 => neg += 1,
            v if v == 0.0 => {}
            other => {
                return Err(Error::Validation(format!("design entry {other} not in {{-1, 0, 1}}")))
            }
        }
    }
    if pos != 3 || neg != 3 {
        return Err(Error::Validation(format!(
            "design row needs three robots per alliance, got {pos} red and {neg} blue"
        )));
    }
    Ok(())
}

/// Design row for a hypothetical match between two alliances.
pub fn alliance_row(roster: &RobotRoster, red: &[String], blue: &[String]) -> Result<Vec<f64>> {
    let mut x = vec![0.0; roster.len()];
    for (ids, sign) in [(red, 1.0), (blue, -1.0)] {
        for id in ids {
            let i = roster.index_of(id).ok_or_else(|| Error::UnknownRobot {
                match_id: "<hypothetical>".into(),
                robot: id.clone(),
            })?;
            if x[i] != 0.0 {
                return Err(Error::Validation(format!("robot `{id}` listed twice")));
            }
            x[i] = sign;
        }
    }
    check_row(&x, roster.len())?;
    Ok(x)
}
