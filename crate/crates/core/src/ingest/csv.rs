//! The canonical match CSV:
//! `match_id,red1,red2,red3,blue1,blue2,blue3,red_score,blue_score`.

use std::io::{Read, Write};
use std::path::Path;

use crate::design::MatchRecord;
use crate::error::{Error, Result};
use crate::ingest::{EventDataset, Source};

pub const CSV_HEADER: [&str; 9] = [
    "match_id", "red1", "red2", "red3", "blue1", "blue2", "blue3", "red_score", "blue_score",
];

/// Event name derived from a file name: `data/2019roe.csv` -> `2019roe`.
pub fn event_from_path(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn read_matches_csv(path: &Path, exclude: &[String]) -> Result<EventDataset> {
    let file = std::fs::File::open(path)?;
    let matches = parse_matches(file, &path.display().to_string())?;
    EventDataset::new(event_from_path(path), matches, exclude, Source::Csv)
}

/// Parses canonical CSV text; `source_name` labels error messages.
pub fn parse_matches(reader: impl Read, source_name: &str) -> Result<Vec<MatchRecord>> {
    let malformed = |line: u64, message: String| Error::Malformed {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let mut rdr = ::csv::ReaderBuilder::new().has_headers(true).trim(::csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(malformed(1, format!("header must be `{}`", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(malformed(line, e.to_string()));
            }
        };
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != CSV_HEADER.len() {
            return Err(malformed(line, format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len())));
        }
        let score = |j: usize| {
            rec[j]
                .parse::<u32>()
                .map_err(|_| malformed(line, format!("{} `{}` is not a non-negative integer", CSV_HEADER[j], &rec[j])))
        };
        let m = MatchRecord {
            match_id: rec[0].to_owned(),
            red: [rec[1].to_owned(), rec[2].to_owned(), rec[3].to_owned()],
            blue: [rec[4].to_owned(), rec[5].to_owned(), rec[6].to_owned()],
            red_score: score(7)?,
            blue_score: score(8)?,
        };
        if m.match_id.is_empty() {
            return Err(malformed(line, "empty match_id".into()));
        }
        m.validate().map_err(|e| malformed(line, e.to_string()))?;
        out.push(m);
    }
    Ok(out)
}

pub fn write_matches(matches: &[MatchRecord], writer: impl Write) -> Result<()> {
    let mut w = ::csv::WriterBuilder::new().terminator(::csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for m in matches {
        let (rs, bs) = (m.red_score.to_string(), m.blue_score.to_string());
        w.write_record([
            m.match_id.as_str(),
            &m.red[0],
            &m.red[1],
            &m.red[2],
            &m.blue[0],
            &m.blue[1],
            &m.blue[2],
            &rs,
            &bs,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matches_csv(dataset: &EventDataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_matches(&dataset.matches, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "match_id,red1,red2,red3,blue1,blue2,blue3,red_score,blue_score\n\
                          qm1,frc1,frc2,frc3,frc4,frc5,frc6,30,21\n";

    #[test]
    fn parses_schema_row() {
        let ms = parse_matches(SAMPLE.as_bytes(), "sample").unwrap();
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].score_diff(), 9.0);
        assert_eq!(ms[0].blue[2], "frc6");
    }

    #[test]
    fn reports_line_numbers() {
        let bad = format!("{SAMPLE}qm2,frc1,frc2,frc3,frc4,frc5,frc6,-3,21\n");
        match parse_matches(bad.as_bytes(), "sample") {
            Err(Error::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let short = format!("{SAMPLE}qm2,frc1,frc2\n");
        assert!(matches!(parse_matches(short.as_bytes(), "s"), Err(Error::Malformed { line: 3, .. })));
        let dup = format!("{SAMPLE}qm2,frc1,frc1,frc3,frc4,frc5,frc6,1,2\n");
        assert!(matches!(parse_matches(dup.as_bytes(), "s"), Err(Error::Malformed { line: 3, .. })));
        assert!(matches!(parse_matches("a,b\n".as_bytes(), "s"), Err(Error::Malformed { line: 1, .. })));
    }

    #[test]
    fn writes_canonical_bytes() {
        let ms = parse_matches(SAMPLE.as_bytes(), "sample").unwrap();
        let mut out = Vec::new();
        write_matches(&ms, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), SAMPLE);
    }
}
