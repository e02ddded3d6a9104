//! Conversion of other match layouts into the canonical CSV.

use std::collections::HashMap;
use std::io::Read;

use crate::design::MatchRecord;
use crate::error::{Error, Result};
use crate::ingest::csv::CSV_HEADER;

/// Source column for each canonical field. Unmapped fields keep their
/// canonical name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    columns: [String; 9],
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap { columns: CSV_HEADER.map(str::to_owned) }
    }
}

impl ColumnMap {
    /// Parses `field=column` pairs separated by commas, e.g.
    /// `match_id=Match,red_score=RedScore`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut map = ColumnMap::default();
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (field, column) = pair
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("column mapping `{pair}` is not field=column")))?;
            let j = CSV_HEADER
                .iter()
                .position(|h| *h == field.trim())
                .ok_or_else(|| Error::Validation(format!("unknown canonical field `{field}`")))?;
            map.columns[j] = column.trim().to_owned();
        }
        Ok(map)
    }

    pub fn column(&self, field: usize) -> &str {
        &self.columns[field]
    }
}

/// Reads a CSV with arbitrary extra columns, picking fields through `map`.
/// Rows with an empty score are treated as unplayed and skipped.
pub fn import_mapped_csv(reader: impl Read, map: &ColumnMap, source_name: &str) -> Result<Vec<MatchRecord>> {
    let malformed = |line: u64, message: String| Error::Malformed {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let mut rdr = ::csv::ReaderBuilder::new().trim(::csv::Trim::All).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut cols = [0usize; 9];
    for (j, slot) in cols.iter_mut().enumerate() {
        let name = map.column(j);
        *slot = *index
            .get(name)
            .ok_or_else(|| malformed(1, format!("missing column `{name}` for {}", CSV_HEADER[j])))?;
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |j: usize| rec.get(cols[j]).ok_or_else(|| malformed(line, format!("row lacks column `{}`", map.column(j))));
        let (rs, bs) = (get(7)?, get(8)?);
        if rs.is_empty() || bs.is_empty() {
            continue;
        }
        let score = |s: &str, j: usize| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v <= f64::from(u32::MAX))
                .map(|v| v as u32)
                .ok_or_else(|| malformed(line, format!("{} `{s}` is not a non-negative integer", CSV_HEADER[j])))
        };
        let m = MatchRecord {
            match_id: normalize_match_id(get(0)?),
            red: [get(1)?.to_owned(), get(2)?.to_owned(), get(3)?.to_owned()],
            blue: [get(4)?.to_owned(), get(5)?.to_owned(), get(6)?.to_owned()],
            red_score: score(rs, 7)?,
            blue_score: score(bs, 8)?,
        };
        m.validate().map_err(|e| malformed(line, e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

/// Bare match numbers become `qm<number>`; anything else is kept.
fn normalize_match_id(raw: &str) -> String {
    if !raw.is_empty() && raw.chars().all(|c| c.is_ascii_digit()) {
        format!("qm{}", raw.trim_start_matches('0').max("0"))
    } else {
        raw.to_owned()
    }
}
