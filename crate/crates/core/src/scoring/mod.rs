//! Submission validation and the prevalence-aware metric suite.
//!
//! Counting is exact; ratios are taken at the end in double precision. A
//! ratio with a zero denominator is [`Metric::Undefined`], never zero.

mod metrics;
mod report;
mod submission;

pub use metrics::{
    no_information_rate, roc_auc, BinaryConfusion, BinaryMetrics, Metric, MulticlassConfusion, UNDEFINED,
};
pub use report::{score, CohortRow, Confusion, PrevalenceContext, PrimaryValue, ScoreReport};
pub use submission::{
    format_score, submission_header, validate_submission, write_submission, Prediction, PredictionSet,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("submission header must be {expected}, found {found}")]
    BadHeader { expected: String, found: String },
    #[error("submission omits {} test players", .0.len())]
    MissingPlayers(Vec<String>),
    #[error("submission names {} players outside the test set", .0.len())]
    UnknownPlayers(Vec<String>),
    #[error("row {row}: player {player_id} appears more than once")]
    DuplicatePlayer { row: usize, player_id: String },
    #[error("row {row}: {reason}")]
    BadValue { row: usize, reason: String },
    #[error("malformed submission CSV: {0}")]
    Csv(String),
    #[error("AUC needs both classes in the answer key")]
    SingleClassKey,
    #[error("prediction type does not match the task kind")]
    KindMismatch,
    #[error("answer key is damaged: {0}")]
    CorruptKey(String),
}

impl From<csv::Error> for ScoringError {
    fn from(e: csv::Error) -> Self {
        ScoringError::Csv(e.to_string())
    }
}
