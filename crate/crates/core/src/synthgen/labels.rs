use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::canonical::text_enum;

use super::pgsi::PGSI_MAX;

pub const LABEL_HEADER: [&str; 6] = ["player_id", "pgsi_score", "vse_flag", "risk_flag", "label_source", "cohort"];

text_enum!(
    /// Where a player's ground truth comes from.
    LabelSource {
        Pgsi => "PGSI",
        Vse => "VSE",
        BehavioralThreshold => "BEHAVIORAL_THRESHOLD",
    }
);

/// Per-player ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerLabel {
    pub player_id: String,
    pub pgsi_score: Option<u8>,
    pub vse_flag: Option<u8>,
    pub risk_flag: u8,
    pub label_source: LabelSource,
    pub cohort: String,
}

#[derive(Debug, thiserror::Error)]
pub enum LabelFileError {
    #[error("label file header must be {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error("label row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("malformed label CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn write_labels<W: Write>(labels: &[PlayerLabel], writer: W) -> Result<(), LabelFileError> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    csv.write_record(LABEL_HEADER)?;
    let opt = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
    for label in labels {
        csv.write_record([
            label.player_id.clone(),
            opt(label.pgsi_score),
            opt(label.vse_flag),
            label.risk_flag.to_string(),
            label.label_source.to_string(),
            label.cohort.clone(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn labels_to_csv(labels: &[PlayerLabel]) -> Vec<u8> {
    let mut out = Vec::new();
    write_labels(labels, &mut out).expect("writing to memory cannot fail");
    out
}

/// Parses a label file strictly: any malformed row is an error.
pub fn parse_labels<R: Read>(reader: R) -> Result<Vec<PlayerLabel>, LabelFileError> {
    let mut csv = csv::ReaderBuilder::new().from_reader(reader);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    if header != LABEL_HEADER {
        return Err(LabelFileError::Header {
            expected: LABEL_HEADER.join(","),
            found: header.join(","),
        });
    }
    let mut labels = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let bad = |message: String| LabelFileError::Row { row, message };
        let flag = |text: &str, name: &str| -> Result<Option<u8>, LabelFileError> {
            match text {
                "" => Ok(None),
                "0" => Ok(Some(0)),
                "1" => Ok(Some(1)),
                other => Err(bad(format!("{name} must be 0 or 1, got {other:?}"))),
            }
        };
        let pgsi_score = match &record[1] {
            "" => None,
            text => match text.parse::<u8>() {
                Ok(score) if score <= PGSI_MAX && !text.starts_with('+') => Some(score),
                _ => return Err(bad(format!("pgsi_score must be 0-{PGSI_MAX}, got {text:?}"))),
            },
        };
        let vse_flag = flag(&record[2], "vse_flag")?;
        let risk_flag = flag(&record[3], "risk_flag")?.ok_or_else(|| bad("risk_flag is required".into()))?;
        let label_source = record[4]
            .parse::<LabelSource>()
            .map_err(|_| bad(format!("unknown label_source {:?}", &record[4])))?;
        if record[0].is_empty() {
            return Err(bad("player_id is empty".into()));
        }
        labels.push(PlayerLabel {
            player_id: record[0].to_string(),
            pgsi_score,
            vse_flag,
            risk_flag,
            label_source,
            cohort: record[5].to_string(),
        });
    }
    Ok(labels)
}
