use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Activity, CanonicalField, EventRecord, SECONDS_PER_DAY};

pub const MAX_PLAYER_ID_LEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    MissingColumn,
    UnexpectedColumn,
    WrongFieldCount,
    InvalidUtf8,
    BadTimestamp,
    NegativeAmount,
    NonPositiveAmount,
    UnknownKind,
    BadEnum,
    BadInteger,
    MissingField,
    FieldNotApplicable,
    InvalidPlayerId,
    InconsistentSession,
    OutcomeBelowStake,
    ConversionOverflow,
    BadAmount,
    LongSession,
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_value(self).expect("unit enum serializes");
        f.write_str(text.as_str().unwrap_or_default())
    }
}

/// A located problem in an event table. `row` is the 0-based data row
/// index (the header is not counted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub row: usize,
    pub field: Option<CanonicalField>,
    pub code: IssueCode,
    pub message: String,
}

impl Issue {
    pub fn new(row: usize, field: impl Into<Option<CanonicalField>>, code: IssueCode, message: impl Into<String>) -> Self {
        Self {
            row,
            field: field.into(),
            code,
            message: message.into(),
        }
    }

    fn sort_key(&self) -> (usize, Option<CanonicalField>, IssueCode) {
        (self.row, self.field, self.code)
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field {
            Some(field) => write!(f, "row {} field {}: {} ({})", self.row, field, self.code, self.message),
            None => write!(f, "row {}: {} ({})", self.row, self.code, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub row_count: usize,
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
    pub pass: bool,
}

impl ValidationReport {
    /// Builds a report, ordering issues by (row, field) and deriving `pass`.
    pub fn new(row_count: usize, mut errors: Vec<Issue>, mut warnings: Vec<Issue>) -> Self {
        errors.sort_by_key(Issue::sort_key);
        warnings.sort_by_key(Issue::sort_key);
        let pass = errors.is_empty();
        Self {
            row_count,
            errors,
            warnings,
            pass,
        }
    }
}

/// Checks every record against the canonical invariants. Violations are
/// reported, never raised.
pub fn validate_events(events: &[EventRecord]) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    for (row, event) in events.iter().enumerate() {
        errors.extend(record_issues(row, event));
        warnings.extend(record_warnings(row, event));
    }
    ValidationReport::new(events.len(), errors, warnings)
}

pub(crate) fn record_issues(row: usize, event: &EventRecord) -> Vec<Issue> {
    let mut issues = Vec::new();
    let id_len = event.player_id.chars().count();
    if id_len == 0 || id_len > MAX_PLAYER_ID_LEN {
        issues.push(Issue::new(
            row,
            CanonicalField::PlayerId,
            IssueCode::InvalidPlayerId,
            format!("player_id must be 1-{MAX_PLAYER_ID_LEN} characters, got {id_len}"),
        ));
    }
    match &event.activity {
        Activity::Session(s) => {
            if s.end_time < event.start_time {
                issues.push(Issue::new(
                    row,
                    CanonicalField::EndTime,
                    IssueCode::BadTimestamp,
                    format!("end_time {} precedes start_time {}", s.end_time, event.start_time),
                ));
            }
            if s.total_staked < 0 {
                issues.push(Issue::new(
                    row,
                    CanonicalField::TotalStaked,
                    IssueCode::NegativeAmount,
                    format!("total_staked {} is negative", s.total_staked),
                ));
            }
            if s.bet_count == 0 && (s.total_staked != 0 || s.net_outcome != 0) {
                issues.push(Issue::new(
                    row,
                    CanonicalField::BetCount,
                    IssueCode::InconsistentSession,
                    format!(
                        "bet_count is 0 but total_staked={} net_outcome={}",
                        s.total_staked, s.net_outcome
                    ),
                ));
            }
            if s.total_staked >= 0 && s.net_outcome < -s.total_staked {
                issues.push(Issue::new(
                    row,
                    CanonicalField::NetOutcome,
                    IssueCode::OutcomeBelowStake,
                    format!("net_outcome {} exceeds the stake {} as a loss", s.net_outcome, s.total_staked),
                ));
            }
            if s.product.is_empty() {
                issues.push(Issue::new(row, CanonicalField::Product, IssueCode::MissingField, "product is empty"));
            }
        }
        Activity::Deposit(t) | Activity::Withdrawal(t) => {
            if t.amount < 0 {
                issues.push(Issue::new(
                    row,
                    CanonicalField::TransactionAmount,
                    IssueCode::NegativeAmount,
                    format!("transaction_amount {} is negative", t.amount),
                ));
            } else if t.amount == 0 {
                issues.push(Issue::new(
                    row,
                    CanonicalField::TransactionAmount,
                    IssueCode::NonPositiveAmount,
                    "transaction_amount must be positive",
                ));
            }
            if t.method.is_empty() {
                issues.push(Issue::new(
                    row,
                    CanonicalField::TransactionMethod,
                    IssueCode::MissingField,
                    "transaction_method is empty",
                ));
            }
        }
    }
    issues
}

fn record_warnings(row: usize, event: &EventRecord) -> Vec<Issue> {
    match event.session() {
        Some(s) if s.end_time.seconds_since(event.start_time) > SECONDS_PER_DAY => vec![Issue::new(
            row,
            CanonicalField::EndTime,
            IssueCode::LongSession,
            "session lasts longer than 24 hours",
        )],
        _ => Vec::new(),
    }
}
