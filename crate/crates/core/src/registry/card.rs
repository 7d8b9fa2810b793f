//! Dataset metadata cards.
//!
//! A card carries one JSON field per attribute of the benchmark metadata
//! table: name, description, dimensions, tasks, target, size, fields,
//! dictionary, creator, citation and versioning.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::canonical::{lookup_field, CANONICAL_HEADER};

use super::RegistryError;

pub const CANONICAL_DICTIONARY_REF: &str = "riskbench://dictionary/canonical-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeHorizon {
    /// Human-readable horizon, e.g. "7 days".
    pub label: String,
    pub days: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimensions {
    pub time_horizon: TimeHorizon,
    pub engagement_level: String,
    pub vertical: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSummary {
    pub task_id: String,
    pub name: String,
    pub goal: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetVariable {
    pub name: String,
    pub definition: String,
    pub threshold_rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataField {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetCard {
    pub dataset_name: String,
    pub description: String,
    pub dimensions: Dimensions,
    pub benchmark_tasks: Vec<TaskSummary>,
    pub target_variable: TargetVariable,
    /// Number of rows in the events file.
    pub size: u64,
    pub data_fields: Vec<DataField>,
    pub data_dictionary_ref: String,
    pub creator: String,
    pub citation: String,
    pub version: String,
    pub timestamp: NaiveDate,
}

/// Card metadata supplied with a synthetic config. The generator fills in
/// the size, the field list and the counts in the description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CardTemplate {
    pub dataset_name: String,
    /// May contain `{players}`, `{sessions}` and `{rows}` placeholders.
    pub description: String,
    pub time_horizon_label: String,
    pub engagement_level: String,
    pub vertical: String,
    pub benchmark_tasks: Vec<TaskSummary>,
    pub target_variable: TargetVariable,
    #[serde(default)]
    pub data_dictionary_ref: Option<String>,
    pub creator: String,
    pub citation: String,
    pub version: String,
    pub timestamp: NaiveDate,
}

/// Counts substituted into a card description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CardCounts {
    pub players: u64,
    pub sessions: u64,
    pub rows: u64,
}

impl CardTemplate {
    pub fn fill(&self, horizon_days: u32, counts: CardCounts) -> DatasetCard {
        let description = self
            .description
            .replace("{players}", &thousands(counts.players))
            .replace("{sessions}", &thousands(counts.sessions))
            .replace("{rows}", &thousands(counts.rows));
        DatasetCard {
            dataset_name: self.dataset_name.clone(),
            description,
            dimensions: Dimensions {
                time_horizon: TimeHorizon {
                    label: self.time_horizon_label.clone(),
                    days: horizon_days,
                },
                engagement_level: self.engagement_level.clone(),
                vertical: self.vertical.clone(),
            },
            benchmark_tasks: self.benchmark_tasks.clone(),
            target_variable: self.target_variable.clone(),
            size: counts.rows,
            data_fields: canonical_data_fields(),
            data_dictionary_ref: self
                .data_dictionary_ref
                .clone()
                .unwrap_or_else(|| CANONICAL_DICTIONARY_REF.to_string()),
            creator: self.creator.clone(),
            citation: self.citation.clone(),
            version: self.version.clone(),
            timestamp: self.timestamp,
        }
    }
}

/// Field list of the canonical event file plus the label target.
pub fn canonical_data_fields() -> Vec<DataField> {
    crate::canonical::DATA_DICTIONARY
        .iter()
        .map(|doc| DataField {
            name: doc.display_name.to_string(),
            description: doc.description.to_string(),
        })
        .collect()
}

fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl DatasetCard {
    /// Registry identifier slug derived from the dataset name: lowercase,
    /// parenthesized qualifiers and filler words dropped, words joined by
    /// hyphens.
    pub fn slug(&self) -> String {
        slugify(&self.dataset_name)
    }

    pub fn dataset_ref(&self) -> Result<DatasetRef, RegistryError> {
        Ok(DatasetRef {
            id: self.slug(),
            version: Version::parse(&self.version)?.to_string(),
        })
    }

    /// Every attribute must be filled in and every canonical column must be
    /// described.
    pub fn check_complete(&self) -> Result<(), RegistryError> {
        let mismatch = |msg: String| Err(RegistryError::CardMismatch(msg));
        let required = [
            ("dataset_name", &self.dataset_name),
            ("description", &self.description),
            ("dimensions.time_horizon.label", &self.dimensions.time_horizon.label),
            ("dimensions.engagement_level", &self.dimensions.engagement_level),
            ("dimensions.vertical", &self.dimensions.vertical),
            ("target_variable.name", &self.target_variable.name),
            ("target_variable.definition", &self.target_variable.definition),
            ("target_variable.threshold_rule", &self.target_variable.threshold_rule),
            ("data_dictionary_ref", &self.data_dictionary_ref),
            ("creator", &self.creator),
            ("citation", &self.citation),
            ("version", &self.version),
        ];
        if let Some((name, _)) = required.iter().find(|(_, v)| v.trim().is_empty()) {
            return mismatch(format!("card field {name} is empty"));
        }
        if self.dimensions.time_horizon.days == 0 {
            return mismatch("dimensions.time_horizon.days must be positive".into());
        }
        if self.benchmark_tasks.is_empty() {
            return mismatch("benchmark_tasks is empty".into());
        }
        if let Some(task) = self
            .benchmark_tasks
            .iter()
            .find(|t| t.task_id.trim().is_empty() || t.goal.trim().is_empty())
        {
            return mismatch(format!("benchmark task {:?} lacks an id or goal", task.task_id));
        }
        if self.slug().is_empty() {
            return mismatch("dataset_name yields an empty identifier".into());
        }
        Version::parse(&self.version)?;
        for column in CANONICAL_HEADER {
            let described = self
                .data_fields
                .iter()
                .any(|f| lookup_field(&f.name).is_some_and(|doc| doc.column == column));
            if !described {
                return mismatch(format!("data_fields does not describe column {column}"));
            }
        }
        if let Some(field) = self.data_fields.iter().find(|f| f.description.trim().is_empty()) {
            return mismatch(format!("data field {} has no description", field.name));
        }
        Ok(())
    }
}

const FILLER_WORDS: [&str; 6] = ["the", "a", "an", "of", "dataset", "data"];

pub fn slugify(name: &str) -> String {
    let mut plain = String::with_capacity(name.len());
    let mut depth = 0usize;
    for c in name.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            _ if depth == 0 => plain.push(c),
            _ => {}
        }
    }
    plain
        .to_lowercase()
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty() && !FILLER_WORDS.contains(w))
        .collect::<Vec<_>>()
        .join("-")
}

/// Dataset version such as `v1` or `v2.1`, ordered numerically.
#[derive(Debug, Clone)]
pub struct Version(Vec<u32>);

impl Version {
    /// Accepts `v1`, `V.1`, `1`, `v1.2` and normalizes to `v1`, `v1.2`.
    pub fn parse(text: &str) -> Result<Self, RegistryError> {
        let trimmed = text.trim();
        let body = trimmed
            .strip_prefix(['v', 'V'])
            .map(|rest| rest.strip_prefix('.').unwrap_or(rest))
            .unwrap_or(trimmed);
        let parts: Result<Vec<u32>, _> = body.split('.').map(str::parse::<u32>).collect();
        match parts {
            Ok(parts) if !parts.is_empty() => Ok(Self(parts)),
            _ => Err(RegistryError::BadVersion(text.to_string())),
        }
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        let len = self.0.len().max(other.0.len());
        let at = |v: &Version, i: usize| v.0.get(i).copied().unwrap_or(0);
        (0..len)
            .map(|i| at(self, i).cmp(&at(other, i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Version {}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "v{}", parts.join("."))
    }
}

/// `id@version` reference to a registered dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DatasetRef {
    pub id: String,
    pub version: String,
}

impl fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

impl FromStr for DatasetRef {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (id, version) = s
            .split_once('@')
            .ok_or_else(|| RegistryError::BadReference(s.to_string()))?;
        if id.is_empty() || version.is_empty() {
            return Err(RegistryError::BadReference(s.to_string()));
        }
        Ok(Self {
            id: id.to_string(),
            version: Version::parse(version)?.to_string(),
        })
    }
}

impl Serialize for DatasetRef {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DatasetRef {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
