use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use riskbench_core::canonical::Timestamp;
use riskbench_core::registry::{DatasetEntry, DatasetFilter, DatasetRef, Registry, RegistryError};
use riskbench_core::scoring::{score, validate_submission, ScoreReport, ScoringError};
use riskbench_core::tasks::{list_tasks, load_task, TaskCard, TaskError, TaskSpec};
use serde::Serialize;

use crate::badge::{assign_badge, Evidence};
use crate::leaderboard::{rank, LeaderboardEntry};
use crate::ledger::{Ledger, LedgerError, SubmissionRecord};

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Timestamp::from_unix(secs as i64)
    })
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("unknown dataset {0}")]
    UnknownDataset(String),
    #[error("unknown submission {0}")]
    UnknownSubmission(String),
    #[error("submission rejected: {0}")]
    ValidationFailed(ScoringError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("storage failure: {0}")]
    StorageFailure(String),
}

impl From<LedgerError> for ServiceError {
    fn from(e: LedgerError) -> Self {
        ServiceError::StorageFailure(e.to_string())
    }
}

impl From<RegistryError> for ServiceError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::UnknownDataset(id) => ServiceError::UnknownDataset(id),
            RegistryError::BadReference(r) | RegistryError::BadVersion(r) => ServiceError::BadRequest(r),
            other => ServiceError::StorageFailure(other.to_string()),
        }
    }
}

fn task_error(task_id: &str, e: TaskError) -> ServiceError {
    match e {
        TaskError::UnknownTask(_) => ServiceError::UnknownTask(task_id.to_string()),
        // Details of a damaged bundle may quote key material; keep them out.
        TaskError::CorruptBundle(_) => ServiceError::StorageFailure(format!("task {task_id} bundle is damaged")),
        other => ServiceError::StorageFailure(other.to_string()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskDetail {
    pub card: TaskCard,
    pub spec: TaskSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct Leaderboard {
    pub task_id: String,
    pub primary_metric: riskbench_core::tasks::PrimaryMetric,
    pub entries: Vec<LeaderboardEntry>,
}

/// Registry, task bundles and ledger behind one facade. Scoring happens
/// before the ledger lock is taken; only the append is serialized.
pub struct Service {
    registry: Registry,
    ledger: Ledger,
    clock: Clock,
}

impl Service {
    pub fn new(registry: Registry, clock: Clock) -> Result<Self, ServiceError> {
        let ledger = Ledger::open(registry.root().join("ledger"))?;
        Ok(Self { registry, ledger, clock })
    }

    pub fn open(home: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        Self::new(Registry::open(home)?, system_clock())
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn datasets(&self, filter: &DatasetFilter) -> Result<Vec<DatasetEntry>, ServiceError> {
        Ok(self.registry.list(filter)?)
    }

    /// All versions of a dataset, or a single one for `id@version`.
    pub fn dataset(&self, id: &str) -> Result<Vec<DatasetEntry>, ServiceError> {
        if id.contains('@') {
            let wanted: DatasetRef = id.parse()?;
            let version = riskbench_core::registry::Version::parse(&wanted.version)?;
            let found: Vec<_> = self
                .registry
                .versions(&wanted.id)?
                .into_iter()
                .filter(|e| riskbench_core::registry::Version::parse(&e.dataset.version).is_ok_and(|v| v == version))
                .collect();
            if found.is_empty() {
                return Err(ServiceError::UnknownDataset(id.to_string()));
            }
            return Ok(found);
        }
        Ok(self.registry.versions(id)?)
    }

    pub fn tasks(&self) -> Result<Vec<TaskCard>, ServiceError> {
        list_tasks(&self.registry.tasks_root()).map_err(|e| task_error("*", e))
    }

    pub fn task(&self, task_id: &str) -> Result<TaskDetail, ServiceError> {
        let bundle = load_task(&self.registry, task_id).map_err(|e| task_error(task_id, e))?;
        Ok(TaskDetail {
            card: bundle.card,
            spec: bundle.spec,
        })
    }

    /// Validates, scores and records a submission.
    pub fn record_submission(
        &self,
        task_id: &str,
        submitter: &str,
        file: &[u8],
        evidence: Evidence,
    ) -> Result<SubmissionRecord, ServiceError> {
        let submitter = submitter.trim();
        if submitter.is_empty() {
            return Err(ServiceError::BadRequest("submitter name is required".into()));
        }
        let bundle = load_task(&self.registry, task_id).map_err(|e| task_error(task_id, e))?;
        let preds = validate_submission(file, &bundle).map_err(ServiceError::ValidationFailed)?;
        let received_at = (self.clock)();
        let report = score(&preds, &bundle, received_at).map_err(|e| match e {
            ScoringError::CorruptKey(_) => ServiceError::StorageFailure(format!("task {task_id} answer key is damaged")),
            other => ServiceError::ValidationFailed(other),
        })?;
        drop(bundle);
        let evidence = evidence.normalized();
        let badge = assign_badge(&evidence);
        let record = self.ledger.append_with(task_id, |submission_id, prior| {
            let duplicate_of = prior
                .iter()
                .find(|r| r.submitter == submitter && r.file_sha256 == preds.checksum)
                .map(|r| r.submission_id.clone());
            SubmissionRecord {
                submission_id,
                task_id: task_id.to_string(),
                submitter: submitter.to_string(),
                received_at,
                file_sha256: preds.checksum.clone(),
                evidence,
                badge,
                duplicate_of,
                report,
            }
        })?;
        tracing::info!(submission = %record.submission_id, badge = ?record.badge, "recorded submission");
        Ok(record)
    }

    pub fn leaderboard(&self, task_id: &str) -> Result<Leaderboard, ServiceError> {
        let detail = self.task(task_id)?;
        Ok(Leaderboard {
            task_id: task_id.to_string(),
            primary_metric: detail.spec.primary_metric,
            entries: rank(&self.ledger.records(task_id)?),
        })
    }

    pub fn report(&self, submission_id: &str) -> Result<ScoreReport, ServiceError> {
        self.ledger
            .find(submission_id)?
            .map(|r| r.report)
            .ok_or_else(|| ServiceError::UnknownSubmission(submission_id.to_string()))
    }
}
