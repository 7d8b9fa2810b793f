use std::collections::{BTreeMap, BTreeSet};

use crate::fsutil::sha256_hex;
use crate::tasks::{TaskBundle, TaskKind};

use super::ScoringError;

/// One submitted prediction.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Score(f64),
    Class(String),
}

/// A validated submission: exactly one prediction per test player.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub kind: TaskKind,
    pub predictions: BTreeMap<String, Prediction>,
    /// SHA-256 of the submitted file bytes.
    pub checksum: String,
}

pub fn submission_header(kind: TaskKind) -> [&'static str; 2] {
    match kind {
        TaskKind::Binary => ["player_id", "score"],
        TaskKind::Multiclass => ["player_id", "class"],
    }
}

/// Checks a submission file against the bundle's test players and classes.
///
/// Rows are numbered from 0, excluding the header. Unknown players are
/// reported before missing ones so a file keyed on the wrong ids fails with
/// the more telling error.
pub fn validate_submission(bytes: &[u8], bundle: &TaskBundle) -> Result<PredictionSet, ScoringError> {
    let kind = bundle.spec.kind();
    let expected = submission_header(kind);
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(bytes);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
        .collect();
    if header != expected {
        return Err(ScoringError::BadHeader {
            expected: expected.join(","),
            found: header.join(","),
        });
    }
    let classes: BTreeSet<&str> = bundle.card.classes.iter().map(String::as_str).collect();
    let mut predictions = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 2 {
            return Err(ScoringError::BadValue {
                row,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let player = record[0].trim();
        let raw = record[1].trim();
        let prediction = match kind {
            TaskKind::Binary => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() && (0.0..=1.0).contains(&v) => Prediction::Score(v),
                _ => {
                    return Err(ScoringError::BadValue {
                        row,
                        reason: format!("score {raw:?} is not a number in [0, 1]"),
                    })
                }
            },
            TaskKind::Multiclass if classes.contains(raw) => Prediction::Class(raw.to_string()),
            TaskKind::Multiclass => {
                return Err(ScoringError::BadValue {
                    row,
                    reason: format!("class {raw:?} is not one of {}", bundle.card.classes.join(", ")),
                })
            }
        };
        if player.is_empty() {
            return Err(ScoringError::BadValue {
                row,
                reason: "player_id is empty".into(),
            });
        }
        if predictions.insert(player.to_string(), prediction).is_some() {
            return Err(ScoringError::DuplicatePlayer {
                row,
                player_id: player.to_string(),
            });
        }
    }

    let test = bundle.test_players();
    let unknown: Vec<String> = predictions
        .keys()
        .filter(|p| !test.contains(p.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(ScoringError::UnknownPlayers(unknown));
    }
    let missing: Vec<String> = test
        .iter()
        .filter(|p| !predictions.contains_key(**p))
        .map(|p| p.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ScoringError::MissingPlayers(missing));
    }
    Ok(PredictionSet {
        kind,
        predictions,
        checksum: sha256_hex(bytes),
    })
}

/// Formats a score with at most six decimals and no trailing zeros.
pub fn format_score(score: f64) -> String {
    let text = format!("{:.6}", score.clamp(0.0, 1.0));
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    if trimmed.is_empty() {
        "0".to_string()
    } else {
        trimmed.to_string()
    }
}

/// Serializes predictions as a submission file.
pub fn write_submission<'a, I>(kind: TaskKind, rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = (&'a str, &'a Prediction)>,
{
    let mut out = submission_header(kind).join(",").into_bytes();
    out.push(b'\n');
    for (player, prediction) in rows {
        let value = match prediction {
            Prediction::Score(s) => format_score(*s),
            Prediction::Class(c) => c.clone(),
        };
        out.extend_from_slice(format!("{player},{value}\n").as_bytes());
    }
    out
}
