//! Append-only JSON-lines ledger, one file per task.
//!
//! A record is committed when its line, newline included, reaches the file.
//! A trailing fragment without a newline is what a crash mid-append leaves
//! behind; readers skip it and the next append cuts it off.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use riskbench_core::canonical::Timestamp;
use riskbench_core::fsutil::FileLock;
use riskbench_core::scoring::{Metric, ScoreReport};
use serde::{Deserialize, Serialize};

use crate::badge::{Badge, Evidence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmissionRecord {
    pub submission_id: String,
    pub task_id: String,
    pub submitter: String,
    pub received_at: Timestamp,
    pub file_sha256: String,
    pub evidence: Evidence,
    pub badge: Badge,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
    pub report: ScoreReport,
}

impl SubmissionRecord {
    pub fn primary_value(&self) -> Metric {
        self.report.primary_metric.value
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error("ledger {path} line {line} is unreadable: {message}")]
    Corrupt { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug)]
pub struct Ledger {
    root: PathBuf,
    writers: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Ledger {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, LedgerError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            writers: Mutex::new(HashMap::new()),
        })
    }

    fn path(&self, task_id: &str) -> PathBuf {
        self.root.join(format!("{task_id}.jsonl"))
    }

    fn writer(&self, task_id: &str) -> Arc<Mutex<()>> {
        let mut writers = self.writers.lock().unwrap_or_else(|e| e.into_inner());
        writers.entry(task_id.to_string()).or_default().clone()
    }

    /// Committed records of a task, oldest first.
    pub fn records(&self, task_id: &str) -> Result<Vec<SubmissionRecord>, LedgerError> {
        read_records(&self.path(task_id))
    }

    pub fn find(&self, submission_id: &str) -> Result<Option<SubmissionRecord>, LedgerError> {
        let Some((task_id, _)) = submission_id.rsplit_once('-') else {
            return Ok(None);
        };
        if !riskbench_core::tasks::valid_task_id(task_id) {
            return Ok(None);
        }
        Ok(self
            .records(task_id)?
            .into_iter()
            .find(|r| r.submission_id == submission_id))
    }

    /// Assigns the next id, lets `build` fill the record, and appends it.
    /// Appends to one task are serialized within the process and, through a
    /// lock file, across processes.
    pub fn append_with<F>(&self, task_id: &str, build: F) -> Result<SubmissionRecord, LedgerError>
    where
        F: FnOnce(String, &[SubmissionRecord]) -> SubmissionRecord,
    {
        let writer = self.writer(task_id);
        let _guard = writer.lock().unwrap_or_else(|e| e.into_inner());
        let _file_lock = FileLock::acquire(&self.root.join(format!("{task_id}.lock")))?;
        let path = self.path(task_id);
        let existing = read_records(&path)?;
        let id = format!("{task_id}-{:06}", existing.len() + 1);
        let record = build(id, &existing);

        let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&path)?;
        cut_partial_tail(&mut file)?;
        let mut line = serde_json::to_vec(&record).expect("record serializes");
        line.push(b'\n');
        file.seek(SeekFrom::End(0))?;
        file.write_all(&line)?;
        file.sync_all()?;
        Ok(record)
    }
}

fn read_records(path: &Path) -> Result<Vec<SubmissionRecord>, LedgerError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let committed = match bytes.iter().rposition(|&b| b == b'\n') {
        Some(end) => &bytes[..=end],
        None => &[][..],
    };
    committed
        .split(|&b| b == b'\n')
        .filter(|line| !line.is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_slice(line).map_err(|e| LedgerError::Corrupt {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn cut_partial_tail(file: &mut fs::File) -> std::io::Result<()> {
    let mut bytes = Vec::new();
    file.seek(SeekFrom::Start(0))?;
    file.read_to_end(&mut bytes)?;
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    if keep < bytes.len() {
        file.set_len(keep as u64)?;
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use riskbench_core::scoring::{BinaryConfusion, Confusion, PrimaryValue};
    use riskbench_core::tasks::{PrimaryMetric, TaskKind};

    pub(crate) fn record(id: String, value: f64) -> SubmissionRecord {
        SubmissionRecord {
            submission_id: id,
            task_id: "T1".into(),
            submitter: "ann".into(),
            received_at: Timestamp::from_unix(1_700_000_000),
            file_sha256: "00".into(),
            evidence: Evidence::default(),
            badge: Badge::Bronze,
            duplicate_of: None,
            report: ScoreReport {
                task_id: "T1".into(),
                dataset: "d@v1".into(),
                kind: TaskKind::Binary,
                primary_metric: PrimaryValue {
                    name: PrimaryMetric::Auc,
                    value: Metric::Value(value),
                },
                decision_threshold: 0.5,
                n_players: 1,
                confusion: Confusion::Binary(BinaryConfusion::default()),
                accuracy: Metric::Undefined,
                sensitivity: Metric::Undefined,
                specificity: Metric::Undefined,
                precision: Metric::Undefined,
                f1: Metric::Undefined,
                auc: None,
                macro_f1: None,
                per_class_recall: None,
                prevalence: 0.0,
                no_information_rate: 1.0,
                all_negative_accuracy: 1.0,
                cohort_field: None,
                cohorts: vec![],
                submission_sha256: "00".into(),
                scored_at: Timestamp::from_unix(1_700_000_000),
            },
        }
    }

    #[test]
    fn ids_are_sequential_and_records_persist() {
        let dir = tempfile::tempdir().unwrap();
        let ledger = Ledger::open(dir.path()).unwrap();
        let a = ledger.append_with("T1", |id, _| record(id, 0.7)).unwrap();
        let b = ledger.append_with("T1", |id, prior| {
            assert_eq!(prior.len(), 1);
            record(id, 0.8)
        }).unwrap();
        assert_eq!(a.submission_id, "T1-000001");
        assert_eq!(b.submission_id, "T1-000002");
        let reopened = Ledger::open(dir.path()).unwrap();
        assert_eq!(reopened.records("T1").unwrap(), vec![a, b.clone()]);
        assert_eq!(reopened.find("T1-000002").unwrap(), Some(b));
        assert_eq!(reopened.find("T1-000009").unwrap(), None);
    }

    #[test]
    fn torn_tail_is_ignored_then_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let ledger = Ledger::open(dir.path()).unwrap();
        let first = ledger.append_with("T1", |id, _| record(id, 0.7)).unwrap();
        let mut file = OpenOptions::new().append(true).open(dir.path().join("T1.jsonl")).unwrap();
        file.write_all(br#"{"submission_id":"T1-000002","task"#).unwrap();
        drop(file);
        assert_eq!(ledger.records("T1").unwrap(), vec![first.clone()]);
        let second = ledger.append_with("T1", |id, _| record(id, 0.9)).unwrap();
        assert_eq!(second.submission_id, "T1-000002");
        assert_eq!(ledger.records("T1").unwrap(), vec![first, second]);
    }

    #[test]
    fn damaged_committed_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("T1.jsonl"), b"not json\n").unwrap();
        let ledger = Ledger::open(dir.path()).unwrap();
        assert!(matches!(ledger.records("T1"), Err(LedgerError::Corrupt { line: 1, .. })));
    }
}
