//! Canonical event schema, CSV codec, harmonizer and validation.
//!
//! Every dataset is a single event stream: session rows and payment rows
//! share one table, discriminated by `event_kind`. Money is integer cents
//! and `net_outcome` is positive when the player wins.

mod codec;
mod dictionary;
mod harmonize;
mod record;
mod validate;

pub use codec::{events_to_csv, parse_events, write_events, ParsedEvents};
pub use dictionary::{lookup_field, CanonicalField, FieldDoc, CANONICAL_HEADER, DATA_DICTIONARY};
pub use harmonize::{
    export, harmonize, ColumnMapping, FieldMapping, Granularity, KindRule, MappingError, MoneyUnit, RawTable,
    SignConvention,
};
pub(crate) use record::text_enum;
pub use record::{
    Activity, EventKind, EventRecord, SessionActivity, Timestamp, Transaction, TransactionStatus, Vertical,
    SECONDS_PER_DAY,
};
pub use validate::{validate_events, Issue, IssueCode, ValidationReport, MAX_PLAYER_ID_LEN};

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("unexpected column {0:?}")]
    UnexpectedColumn(String),
    #[error("column {0:?} appears more than once")]
    DuplicateColumn(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("{} of {} rows failed validation; first: {}", .0.errors.len(), .0.row_count, first_issue(.0))]
    InvalidRows(Box<ValidationReport>),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn first_issue(report: &ValidationReport) -> String {
    report.errors.first().map(ToString::to_string).unwrap_or_default()
}

impl From<csv::Error> for CanonicalError {
    fn from(err: csv::Error) -> Self {
        CanonicalError::Csv(err.to_string())
    }
}
