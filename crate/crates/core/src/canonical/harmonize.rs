//! Harmonization of operator exports into canonical events.
//!
//! Operator files disagree on column names ("stake" vs "amount"), on money
//! units and on whether a positive result means the player or the house
//! won. A [`FieldMapping`] spells those choices out; [`harmonize`] applies
//! it and [`export`] is its inverse.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::codec::{decode_row, encode_row};
use super::{CanonicalError, CanonicalField, EventKind, EventRecord, Issue, IssueCode, ParsedEvents};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SignConvention {
    PlayerWinPositive,
    OperatorWinPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MoneyUnit {
    Cents,
    WholeCurrency,
}

/// Level at which wagers are recorded in the source file. Only
/// session-level aggregates are supported; leg-level files are rejected
/// rather than aggregated by guesswork.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Granularity {
    #[default]
    Session,
    Leg,
}

/// How a source row's event kind is determined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KindRule {
    /// A column holds a tag per row. `values` translates source tags to
    /// kinds; when empty the tags must already be canonical kind names.
    Column {
        column: String,
        #[serde(default)]
        values: BTreeMap<String, EventKind>,
    },
    /// Every row of the file has the same kind.
    Fixed { kind: EventKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub source: String,
    pub canonical: CanonicalField,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMapping {
    pub source_to_canonical: Vec<ColumnMapping>,
    pub sign_convention: SignConvention,
    pub unit: MoneyUnit,
    pub kind_rule: KindRule,
    #[serde(default)]
    pub granularity: Granularity,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MappingError {
    #[error("required canonical field {0} has no source column")]
    UnmappedRequiredField(CanonicalField),
    #[error("ambiguous mapping: {0}")]
    AmbiguousMapping(String),
    #[error("source column {0:?} is not present in the header")]
    SourceColumnMissing(String),
    #[error("leg-level wager data is not supported; aggregate legs to sessions first")]
    UnsupportedGranularity,
    #[error("cannot export {0} rows under this mapping")]
    KindNotExportable(EventKind),
}

/// A source table as rows of strings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, CanonicalError> {
        let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers = csv.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in csv.records() {
            rows.push(record?.iter().map(str::to_string).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CanonicalError> {
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        csv.write_record(&self.headers)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush().map_err(|e| CanonicalError::Csv(e.to_string()))?;
        Ok(())
    }
}

impl FieldMapping {
    /// Kinds this mapping can produce.
    pub fn declared_kinds(&self) -> BTreeSet<EventKind> {
        match &self.kind_rule {
            KindRule::Fixed { kind } => BTreeSet::from([*kind]),
            KindRule::Column { values, .. } if !values.is_empty() => values.values().copied().collect(),
            KindRule::Column { .. } => EventKind::ALL.iter().copied().collect(),
        }
    }

    /// Structural checks that do not need a source header.
    pub fn check(&self) -> Result<(), MappingError> {
        if self.granularity == Granularity::Leg {
            return Err(MappingError::UnsupportedGranularity);
        }
        let mut targets = BTreeSet::new();
        let mut sources = BTreeSet::new();
        for pair in &self.source_to_canonical {
            if pair.canonical == CanonicalField::EventKind {
                return Err(MappingError::AmbiguousMapping(
                    "event_kind is set by the kind rule and cannot also be mapped".into(),
                ));
            }
            if !targets.insert(pair.canonical) {
                return Err(MappingError::AmbiguousMapping(format!(
                    "canonical field {} has more than one source",
                    pair.canonical
                )));
            }
            if !sources.insert(pair.source.as_str()) {
                return Err(MappingError::AmbiguousMapping(format!(
                    "source column {:?} is mapped more than once",
                    pair.source
                )));
            }
        }
        if let KindRule::Column { column, .. } = &self.kind_rule {
            if sources.contains(column.as_str()) {
                return Err(MappingError::AmbiguousMapping(format!(
                    "kind column {column:?} is also mapped to a canonical field"
                )));
            }
        }
        let mut required = vec![CanonicalField::PlayerId, CanonicalField::StartTime];
        for kind in self.declared_kinds() {
            required.extend_from_slice(CanonicalField::kind_fields(kind));
        }
        if let Some(missing) = required.into_iter().find(|f| !targets.contains(f)) {
            return Err(MappingError::UnmappedRequiredField(missing));
        }
        Ok(())
    }

    /// Checks the mapping against a concrete header and returns the source
    /// position of every canonical field plus the kind column.
    fn resolve(&self, headers: &[String]) -> Result<ResolvedMapping, MappingError> {
        self.check()?;
        let position = |name: &str| {
            let mut hits = headers.iter().enumerate().filter(|(_, h)| h.as_str() == name);
            match (hits.next(), hits.next()) {
                (Some((i, _)), None) => Ok(i),
                (Some(_), Some(_)) => Err(MappingError::AmbiguousMapping(format!(
                    "source header contains {name:?} more than once"
                ))),
                (None, _) => Err(MappingError::SourceColumnMissing(name.to_string())),
            }
        };
        let mut columns = [None; 13];
        for pair in &self.source_to_canonical {
            columns[pair.canonical.index()] = Some(position(&pair.source)?);
        }
        let kind_column = match &self.kind_rule {
            KindRule::Column { column, .. } => Some(position(column)?),
            KindRule::Fixed { .. } => None,
        };
        Ok(ResolvedMapping { columns, kind_column })
    }
}

struct ResolvedMapping {
    columns: [Option<usize>; 13],
    kind_column: Option<usize>,
}

/// Converts a source table to canonical events. Mapping problems are
/// errors; row problems are collected with their row index.
pub fn harmonize(raw: &RawTable, mapping: &FieldMapping) -> Result<ParsedEvents, MappingError> {
    let resolved = mapping.resolve(&raw.headers)?;
    let mut parsed = ParsedEvents {
        events: Vec::new(),
        issues: Vec::new(),
        row_count: raw.rows.len(),
    };
    for (row, cells) in raw.rows.iter().enumerate() {
        if cells.len() != raw.headers.len() {
            parsed.issues.push(Issue::new(
                row,
                None,
                IssueCode::WrongFieldCount,
                format!("expected {} fields, found {}", raw.headers.len(), cells.len()),
            ));
            continue;
        }
        match canonical_cells(row, cells, mapping, &resolved) {
            Ok(values) => {
                let refs: [&str; 13] = std::array::from_fn(|i| values[i].as_str());
                match decode_row(row, &refs) {
                    Ok(event) => parsed.events.push(event),
                    Err(issues) => parsed.issues.extend(issues),
                }
            }
            Err(issues) => parsed.issues.extend(issues),
        }
    }
    Ok(parsed)
}

fn canonical_cells(
    row: usize,
    cells: &[String],
    mapping: &FieldMapping,
    resolved: &ResolvedMapping,
) -> Result<[String; 13], Vec<Issue>> {
    let mut values: [String; 13] = Default::default();
    let mut issues = Vec::new();

    values[CanonicalField::EventKind.index()] = match (&mapping.kind_rule, resolved.kind_column) {
        (KindRule::Fixed { kind }, _) => kind.to_string(),
        (KindRule::Column { values: aliases, .. }, Some(col)) => {
            let tag = cells[col].as_str();
            if aliases.is_empty() {
                tag.to_string()
            } else {
                match aliases.get(tag) {
                    Some(kind) => kind.to_string(),
                    None => {
                        issues.push(Issue::new(
                            row,
                            CanonicalField::EventKind,
                            IssueCode::UnknownKind,
                            format!("kind tag {tag:?} is not in the mapping"),
                        ));
                        String::new()
                    }
                }
            }
        }
        (KindRule::Column { .. }, None) => unreachable!("resolved mappings carry the kind column"),
    };

    for field in CanonicalField::ALL {
        let Some(col) = resolved.columns[field.index()] else {
            continue;
        };
        let text = cells[col].trim();
        if !field.is_money() || text.is_empty() {
            values[field.index()] = cells[col].clone();
            continue;
        }
        let flip = field == CanonicalField::NetOutcome && mapping.sign_convention == SignConvention::OperatorWinPositive;
        match to_cents(text, mapping.unit).and_then(|c| if flip { c.checked_neg().ok_or(MoneyError::Overflow) } else { Ok(c) }) {
            Ok(cents) => values[field.index()] = cents.to_string(),
            Err(MoneyError::Overflow) => issues.push(Issue::new(
                row,
                field,
                IssueCode::ConversionOverflow,
                format!("{text:?} does not fit in 64-bit cents"),
            )),
            Err(MoneyError::Invalid) => issues.push(Issue::new(
                row,
                field,
                IssueCode::BadAmount,
                format!("{text:?} is not a {} amount", unit_name(mapping.unit)),
            )),
        }
    }
    if issues.is_empty() {
        Ok(values)
    } else {
        Err(issues)
    }
}

fn unit_name(unit: MoneyUnit) -> &'static str {
    match unit {
        MoneyUnit::Cents => "whole-cent",
        MoneyUnit::WholeCurrency => "two-decimal currency",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MoneyError {
    Invalid,
    Overflow,
}

/// Parses a decimal money string exactly. Whole-currency values may carry
/// up to two decimals (further digits must be zero); no floating point is
/// involved.
pub(crate) fn to_cents(text: &str, unit: MoneyUnit) -> Result<i64, MoneyError> {
    let (negative, body) = match text.as_bytes().first() {
        Some(b'-') => (true, &text[1..]),
        Some(b'+') => (false, &text[1..]),
        _ => (false, text),
    };
    let (whole, frac) = match (unit, body.split_once('.')) {
        (MoneyUnit::Cents, Some(_)) => return Err(MoneyError::Invalid),
        (_, Some((w, f))) => (w, f),
        (_, None) => (body, ""),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(whole) || !(frac.is_empty() || digits(frac)) {
        return Err(MoneyError::Invalid);
    }
    if frac.len() > 2 && frac[2..].bytes().any(|b| b != b'0') {
        return Err(MoneyError::Invalid);
    }
    let mut magnitude: i128 = 0;
    for b in whole.bytes() {
        magnitude = magnitude * 10 + i128::from(b - b'0');
        if magnitude > i128::from(i64::MAX) + 1 {
            return Err(MoneyError::Overflow);
        }
    }
    if unit == MoneyUnit::WholeCurrency {
        let mut cents = 0i128;
        for (i, b) in frac.bytes().take(2).enumerate() {
            cents += i128::from(b - b'0') * if i == 0 { 10 } else { 1 };
        }
        magnitude = magnitude * 100 + cents;
    }
    let signed = if negative { -magnitude } else { magnitude };
    i64::try_from(signed).map_err(|_| MoneyError::Overflow)
}

pub(crate) fn from_cents(cents: i64, unit: MoneyUnit) -> String {
    match unit {
        MoneyUnit::Cents => cents.to_string(),
        MoneyUnit::WholeCurrency => {
            let magnitude = i128::from(cents).abs();
            let sign = if cents < 0 { "-" } else { "" };
            format!("{sign}{}.{:02}", magnitude / 100, magnitude % 100)
        }
    }
}

/// Renders canonical events in the source layout described by `mapping`;
/// the inverse of [`harmonize`] for every event the mapping can express.
pub fn export(events: &[EventRecord], mapping: &FieldMapping) -> Result<RawTable, MappingError> {
    mapping.check()?;
    let mut headers: Vec<String> = mapping.source_to_canonical.iter().map(|p| p.source.clone()).collect();
    let declared = mapping.declared_kinds();
    let kind_tag = |kind: EventKind| -> Result<Option<String>, MappingError> {
        if !declared.contains(&kind) {
            return Err(MappingError::KindNotExportable(kind));
        }
        Ok(match &mapping.kind_rule {
            KindRule::Fixed { .. } => None,
            KindRule::Column { values, .. } if values.is_empty() => Some(kind.to_string()),
            // Several tags may map to one kind; the first in key order is used.
            KindRule::Column { values, .. } => values.iter().find(|(_, k)| **k == kind).map(|(tag, _)| tag.clone()),
        })
    };
    if let KindRule::Column { column, .. } = &mapping.kind_rule {
        headers.push(column.clone());
    }
    let mut rows = Vec::with_capacity(events.len());
    for event in events {
        let cells = encode_row(event);
        let mut row: Vec<String> = Vec::with_capacity(headers.len());
        for pair in &mapping.source_to_canonical {
            let text = &cells[pair.canonical.index()];
            if pair.canonical.is_money() && !text.is_empty() {
                let mut cents: i64 = text.parse().expect("canonical money is an integer");
                if pair.canonical == CanonicalField::NetOutcome
                    && mapping.sign_convention == SignConvention::OperatorWinPositive
                {
                    cents = -cents;
                }
                row.push(from_cents(cents, mapping.unit));
            } else {
                row.push(text.clone());
            }
        }
        if let Some(tag) = kind_tag(event.kind())? {
            row.push(tag);
        }
        rows.push(row);
    }
    Ok(RawTable { headers, rows })
}
