use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Confidence, Side};

/// A collective forecast joined with the market price and the final score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub pick: Side,
    pub predicted_margin: f64,
    pub confidence: Confidence,
    pub messages_per_minute: f64,
    /// Market-implied win probability of the picked team.
    pub vegas_prob_pick: f64,
    /// Market-implied probability that the picked team covers the run line.
    pub ats_prob_pick: f64,
    pub ats_line_runs: f64,
    pub winner: Side,
    pub actual_margin: u32,
}

pub const RECORD_COLUMNS: [&str; 10] = [
    "game_id",
    "pick",
    "predicted_margin",
    "confidence",
    "messages_per_minute",
    "vegas_prob_pick",
    "ats_prob_pick",
    "ats_line_runs",
    "winner",
    "actual_margin",
];

impl GameRecord {
    pub fn pick_won(&self) -> bool {
        self.winner == self.pick
    }

    pub fn covered(&self) -> bool {
        self.pick_won() && f64::from(self.actual_margin) >= self.ats_line_runs
    }

    /// Checks the record invariants; `row` is only used for the error.
    pub fn validate(&self, row: usize) -> Result<()> {
        let bad = |column: &str, message: String| Error::InvalidRecord {
            row,
            column: column.to_string(),
            message,
        };
        if self.game_id.trim().is_empty() {
            return Err(bad("game_id", "empty game id".into()));
        }
        for (column, p) in [
            ("vegas_prob_pick", self.vegas_prob_pick),
            ("ats_prob_pick", self.ats_prob_pick),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(bad(column, format!("{p} is not in the open interval (0, 1)")));
            }
        }
        if !(self.predicted_margin.is_finite() && self.predicted_margin >= 0.0) {
            return Err(bad(
                "predicted_margin",
                format!("{} must be finite and >= 0", self.predicted_margin),
            ));
        }
        if !(self.messages_per_minute.is_finite() && self.messages_per_minute >= 0.0) {
            return Err(bad(
                "messages_per_minute",
                format!("{} must be finite and >= 0", self.messages_per_minute),
            ));
        }
        if !(self.ats_line_runs.is_finite() && self.ats_line_runs > 0.0) {
            return Err(bad(
                "ats_line_runs",
                format!("{} must be positive", self.ats_line_runs),
            ));
        }
        if self.actual_margin < 1 {
            return Err(bad("actual_margin", "games cannot end tied".into()));
        }
        Ok(())
    }
}

fn field<T: FromStr>(
    record: &csv::StringRecord,
    index: usize,
    row: usize,
    column: &str,
) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(index).unwrap_or("").trim();
    raw.parse().map_err(|e: T::Err| Error::InvalidRecord {
        row,
        column: column.to_string(),
        message: format!("cannot parse `{raw}`: {e}"),
    })
}

/// Reads and validates a record CSV. Rows are numbered from 1, excluding the
/// header.
pub fn read_records_from<R: Read>(reader: R) -> Result<Vec<GameRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; RECORD_COLUMNS.len()];
    for (slot, name) in idx.iter_mut().zip(RECORD_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec?;
        let record = GameRecord {
            game_id: field(&rec, idx[0], row, RECORD_COLUMNS[0])?,
            pick: field(&rec, idx[1], row, RECORD_COLUMNS[1])?,
            predicted_margin: field(&rec, idx[2], row, RECORD_COLUMNS[2])?,
            confidence: field(&rec, idx[3], row, RECORD_COLUMNS[3])?,
            messages_per_minute: field(&rec, idx[4], row, RECORD_COLUMNS[4])?,
            vegas_prob_pick: field(&rec, idx[5], row, RECORD_COLUMNS[5])?,
            ats_prob_pick: field(&rec, idx[6], row, RECORD_COLUMNS[6])?,
            ats_line_runs: field(&rec, idx[7], row, RECORD_COLUMNS[7])?,
            winner: field(&rec, idx[8], row, RECORD_COLUMNS[8])?,
            actual_margin: field(&rec, idx[9], row, RECORD_COLUMNS[9])?,
        };
        record.validate(row)?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<GameRecord>> {
    read_records_from(File::open(path)?)
}

pub fn write_records_to<W: Write>(writer: W, records: &[GameRecord]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(RECORD_COLUMNS)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_records(path: &Path, records: &[GameRecord]) -> Result<()> {
    write_records_to(File::create(path)?, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> GameRecord {
        GameRecord {
            game_id: "g1".into(),
            pick: Side::A,
            predicted_margin: 1.7,
            confidence: Confidence::High,
            messages_per_minute: 31.2,
            vegas_prob_pick: 0.57,
            ats_prob_pick: 0.44,
            ats_line_runs: 2.0,
            winner: Side::A,
            actual_margin: 2,
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_records_to(&mut buf, &[sample()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "game_id,pick,predicted_margin,confidence,messages_per_minute,vegas_prob_pick,ats_prob_pick,ats_line_runs,winner,actual_margin"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "g1,A,1.7,High,31.2,0.57,0.44,2.0,A,2");
    }

    #[test]
    fn bad_row_names_row_and_column() {
        let csv = "game_id,pick,predicted_margin,confidence,messages_per_minute,vegas_prob_pick,ats_prob_pick,ats_line_runs,winner,actual_margin\n\
                   g1,A,1.7,High,31.2,0.57,0.44,2,A,2\n\
                   g2,B,0.4,Low,20,1.2,0.44,2,A,3\n";
        let err = read_records_from(csv.as_bytes()).unwrap_err();
        match err {
            Error::InvalidRecord { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "vegas_prob_pick");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tied_game_rejected() {
        let csv = "game_id,pick,predicted_margin,confidence,messages_per_minute,vegas_prob_pick,ats_prob_pick,ats_line_runs,winner,actual_margin\n\
                   g1,A,1.7,High,31.2,0.57,0.44,2,A,0\n";
        assert!(matches!(
            read_records_from(csv.as_bytes()),
            Err(Error::InvalidRecord { column, .. }) if column == "actual_margin"
        ));
    }

    #[test]
    fn unparseable_side() {
        let csv = "game_id,pick,predicted_margin,confidence,messages_per_minute,vegas_prob_pick,ats_prob_pick,ats_line_runs,winner,actual_margin\n\
                   g1,C,1.7,High,31.2,0.57,0.44,2,A,1\n";
        assert!(matches!(
            read_records_from(csv.as_bytes()),
            Err(Error::InvalidRecord { row: 1, column, .. }) if column == "pick"
        ));
    }

    #[test]
    fn missing_column() {
        let csv = "game_id,pick\ng1,A\n";
        assert!(matches!(read_records_from(csv.as_bytes()), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn ats_line_is_inclusive() {
        let mut r = sample();
        r.actual_margin = 2;
        assert!(r.covered());
        r.actual_margin = 1;
        assert!(!r.covered());
    }

    fn arb_record() -> impl Strategy<Value = GameRecord> {
        (
            "[a-z0-9]{1,8}",
            any::<bool>(),
            0.0f64..10.0,
            any::<bool>(),
            0.0f64..80.0,
            0.01f64..0.99,
            0.01f64..0.99,
            0.5f64..3.0,
            any::<bool>(),
            1u32..15,
        )
            .prop_map(|(id, pa, pm, hi, mpm, vp, ap, line, wa, am)| GameRecord {
                game_id: id,
                pick: if pa { Side::A } else { Side::B },
                predicted_margin: pm,
                confidence: if hi { Confidence::High } else { Confidence::Low },
                messages_per_minute: mpm,
                vegas_prob_pick: vp,
                ats_prob_pick: ap,
                ats_line_runs: line,
                winner: if wa { Side::A } else { Side::B },
                actual_margin: am,
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip(records in prop::collection::vec(arb_record(), 0..20)) {
            let mut buf = Vec::new();
            write_records_to(&mut buf, &records).unwrap();
            let back = read_records_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back, records);
        }
    }
}
