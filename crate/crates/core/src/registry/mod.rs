//! Versioned dataset storage with integrity checksums.
//!
//! Layout under the registry root:
//!
//! ```text
//! index.json
//! datasets/<id>/<version>/{events.csv,labels.csv,card.json,manifest.json}
//! tasks/<task_id>/...
//! ```
//!
//! Writers serialize through an exclusive lock on `index.lock`. Dataset
//! directories are assembled under a temporary name and renamed into place
//! before the index is rewritten, so a listed dataset is always complete.

mod card;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canonical::{parse_events, EventRecord, ValidationReport};
use crate::fsutil::{sha256_hex, temp_sibling, to_json_bytes, write_atomic, FileLock};
use crate::synthgen::{parse_labels, PlayerLabel};

pub use card::{
    canonical_data_fields, slugify, CardCounts, CardTemplate, DataField, DatasetCard, DatasetRef, Dimensions,
    TargetVariable, TaskSummary, TimeHorizon, Version, CANONICAL_DICTIONARY_REF,
};

pub const HOME_ENV: &str = "RISKBENCH_HOME";

pub const EVENTS_FILE: &str = "events.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const CARD_FILE: &str = "card.json";
pub const MANIFEST_FILE: &str = "manifest.json";
const DATASET_FILES: [&str; 4] = [EVENTS_FILE, LABELS_FILE, CARD_FILE, MANIFEST_FILE];

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("card does not match the data: {0}")]
    CardMismatch(String),
    #[error("{0} is already registered")]
    DuplicateVersion(DatasetRef),
    #[error("version {attempted} of {id} is not newer than the latest registered version {latest}")]
    VersionNotMonotonic { id: String, latest: String, attempted: String },
    #[error("dataset failed validation: {message}")]
    ValidationFailed {
        message: String,
        report: Option<Box<ValidationReport>>,
    },
    #[error("unknown dataset {0}")]
    UnknownDataset(String),
    #[error("invalid version {0:?}")]
    BadVersion(String),
    #[error("invalid dataset reference {0:?}; expected id@version")]
    BadReference(String),
    #[error("integrity check failed for {dataset}: {files:?} do not match the index")]
    IntegrityFailure { dataset: DatasetRef, files: Vec<String> },
    #[error("registry index is unreadable: {0}")]
    CorruptIndex(String),
    #[error("registry storage error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub version: String,
    /// File name to SHA-256 hex digest.
    pub checksums: BTreeMap<String, String>,
    pub card: DatasetCard,
}

/// Single source of truth for what is registered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryIndex {
    pub datasets: BTreeMap<String, Vec<IndexEntry>>,
}

impl RegistryIndex {
    pub fn entry(&self, dataset: &DatasetRef) -> Option<&IndexEntry> {
        let wanted = Version::parse(&dataset.version).ok()?;
        self.datasets
            .get(&dataset.id)?
            .iter()
            .find(|e| Version::parse(&e.version).is_ok_and(|v| v == wanted))
    }
}

/// A registered dataset as returned by [`Registry::list`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub dataset: DatasetRef,
    pub card: DatasetCard,
}

/// Optional dimension predicates; text predicates compare case-insensitively.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFilter {
    pub vertical: Option<String>,
    pub engagement_level: Option<String>,
    pub min_horizon_days: Option<u32>,
    pub max_horizon_days: Option<u32>,
}

impl DatasetFilter {
    pub fn matches(&self, card: &DatasetCard) -> bool {
        let eq = |want: &Option<String>, have: &str| want.as_ref().is_none_or(|w| w.eq_ignore_ascii_case(have.trim()));
        let days = card.dimensions.time_horizon.days;
        eq(&self.vertical, &card.dimensions.vertical)
            && eq(&self.engagement_level, &card.dimensions.engagement_level)
            && self.min_horizon_days.is_none_or(|d| days >= d)
            && self.max_horizon_days.is_none_or(|d| days <= d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileCheck {
    pub file: String,
    pub expected: String,
    pub actual: Option<String>,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub dataset: DatasetRef,
    pub files: Vec<FileCheck>,
    pub pass: bool,
}

impl IntegrityReport {
    pub fn failed_files(&self) -> Vec<String> {
        self.files.iter().filter(|f| !f.ok).map(|f| f.file.clone()).collect()
    }
}

/// A dataset read back from storage after its checksums were verified.
#[derive(Debug, Clone)]
pub struct StoredDataset {
    pub dataset: DatasetRef,
    pub card: DatasetCard,
    pub events: Vec<EventRecord>,
    pub labels: Vec<PlayerLabel>,
}

#[derive(Debug, Clone)]
pub struct Registry {
    root: PathBuf,
}

impl Registry {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let root = root.into();
        fs::create_dir_all(root.join("datasets"))?;
        Ok(Self { root })
    }

    /// Opens the registry named by `RISKBENCH_HOME`, falling back to the
    /// platform data directory.
    pub fn from_env() -> Result<Self, RegistryError> {
        Self::open(default_home())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tasks_root(&self) -> PathBuf {
        self.root.join("tasks")
    }

    pub fn dataset_dir(&self, dataset: &DatasetRef) -> PathBuf {
        self.root.join("datasets").join(&dataset.id).join(&dataset.version)
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn lock(&self) -> Result<FileLock, RegistryError> {
        Ok(FileLock::acquire(&self.root.join("index.lock"))?)
    }

    pub fn index(&self) -> Result<RegistryIndex, RegistryError> {
        match fs::read(self.index_path()) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| RegistryError::CorruptIndex(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(RegistryIndex::default()),
            Err(e) => Err(e.into()),
        }
    }

    /// Registers the files of a dataset directory produced by the generator.
    pub fn register_dir(&self, dir: &Path) -> Result<DatasetRef, RegistryError> {
        let card: DatasetCard = serde_json::from_slice(&fs::read(dir.join(CARD_FILE))?)
            .map_err(|e| RegistryError::CardMismatch(format!("card.json is not a valid card: {e}")))?;
        let manifest = dir.join(MANIFEST_FILE);
        self.register(
            &dir.join(EVENTS_FILE),
            &dir.join(LABELS_FILE),
            &card,
            manifest.exists().then_some(manifest.as_path()),
        )
    }

    pub fn register(
        &self,
        events_file: &Path,
        labels_file: &Path,
        card: &DatasetCard,
        manifest_file: Option<&Path>,
    ) -> Result<DatasetRef, RegistryError> {
        let events = fs::read(events_file)?;
        let labels = fs::read(labels_file)?;
        let manifest = manifest_file.map(fs::read).transpose()?;
        self.register_bytes(&events, &labels, card, manifest.as_deref())
    }

    pub fn register_bytes(
        &self,
        events_csv: &[u8],
        labels_csv: &[u8],
        card: &DatasetCard,
        manifest: Option<&[u8]>,
    ) -> Result<DatasetRef, RegistryError> {
        card.check_complete()?;
        let (events, labels) = check_contents(events_csv, labels_csv)?;
        if card.size != events.len() as u64 {
            return Err(RegistryError::CardMismatch(format!(
                "card size is {} but the events file has {} rows",
                card.size,
                events.len()
            )));
        }
        drop((events, labels));
        let dataset = card.dataset_ref()?;
        let card_bytes = to_json_bytes(card);
        let manifest_bytes = match manifest {
            Some(bytes) => bytes.to_vec(),
            None => to_json_bytes(&serde_json::json!({ "provenance": "not supplied" })),
        };
        let contents: [(&str, &[u8]); 4] = [
            (EVENTS_FILE, events_csv),
            (LABELS_FILE, labels_csv),
            (CARD_FILE, &card_bytes),
            (MANIFEST_FILE, &manifest_bytes),
        ];

        let _lock = self.lock()?;
        let mut index = self.index()?;
        let new_version = Version::parse(&dataset.version)?;
        if index.entry(&dataset).is_some() {
            return Err(RegistryError::DuplicateVersion(dataset));
        }
        if let Some(latest) = index
            .datasets
            .get(&dataset.id)
            .and_then(|entries| entries.iter().filter_map(|e| Version::parse(&e.version).ok()).max())
        {
            if latest >= new_version {
                return Err(RegistryError::VersionNotMonotonic {
                    id: dataset.id.clone(),
                    latest: latest.to_string(),
                    attempted: dataset.version.clone(),
                });
            }
        }

        let final_dir = self.dataset_dir(&dataset);
        let staging = temp_sibling(&final_dir);
        fs::create_dir_all(&staging)?;
        let mut checksums = BTreeMap::new();
        for (name, bytes) in contents {
            fs::write(staging.join(name), bytes)?;
            checksums.insert(name.to_string(), sha256_hex(bytes));
        }
        if final_dir.exists() {
            // Left behind by a register that died before updating the index.
            fs::remove_dir_all(&final_dir)?;
        }
        fs::rename(&staging, &final_dir)?;

        index.datasets.entry(dataset.id.clone()).or_default().push(IndexEntry {
            version: dataset.version.clone(),
            checksums,
            card: card.clone(),
        });
        write_atomic(&self.index_path(), &to_json_bytes(&index))?;
        Ok(dataset)
    }

    /// Cards matching `filter`, ordered by name then version descending.
    pub fn list(&self, filter: &DatasetFilter) -> Result<Vec<DatasetEntry>, RegistryError> {
        let index = self.index()?;
        let mut entries: Vec<DatasetEntry> = index
            .datasets
            .iter()
            .flat_map(|(id, versions)| {
                versions.iter().map(move |e| DatasetEntry {
                    dataset: DatasetRef {
                        id: id.clone(),
                        version: e.version.clone(),
                    },
                    card: e.card.clone(),
                })
            })
            .filter(|e| filter.matches(&e.card))
            .collect();
        entries.sort_by(|a, b| {
            a.card
                .dataset_name
                .cmp(&b.card.dataset_name)
                .then_with(|| a.dataset.id.cmp(&b.dataset.id))
                .then_with(|| version_key(&b.dataset.version).cmp(&version_key(&a.dataset.version)))
        });
        Ok(entries)
    }

    /// All registered versions of `id`, newest first.
    pub fn versions(&self, id: &str) -> Result<Vec<DatasetEntry>, RegistryError> {
        let entries: Vec<_> = self
            .list(&DatasetFilter::default())?
            .into_iter()
            .filter(|e| e.dataset.id == id)
            .collect();
        if entries.is_empty() {
            return Err(RegistryError::UnknownDataset(id.to_string()));
        }
        Ok(entries)
    }

    /// Recomputes checksums of the stored files and compares them with the index.
    pub fn verify(&self, dataset: &DatasetRef) -> Result<IntegrityReport, RegistryError> {
        let index = self.index()?;
        let entry = index
            .entry(dataset)
            .ok_or_else(|| RegistryError::UnknownDataset(dataset.to_string()))?;
        let dir = self.dataset_dir(dataset);
        let files: Vec<FileCheck> = entry
            .checksums
            .iter()
            .map(|(file, expected)| {
                let actual = fs::read(dir.join(file)).ok().map(|b| sha256_hex(&b));
                FileCheck {
                    ok: actual.as_deref() == Some(expected.as_str()),
                    file: file.clone(),
                    expected: expected.clone(),
                    actual,
                }
            })
            .collect();
        let pass = files.iter().all(|f| f.ok) && DATASET_FILES.iter().all(|f| entry.checksums.contains_key(*f));
        Ok(IntegrityReport {
            dataset: dataset.clone(),
            files,
            pass,
        })
    }

    /// Reads a dataset back, refusing content that no longer matches the index.
    pub fn load(&self, dataset: &DatasetRef) -> Result<StoredDataset, RegistryError> {
        let report = self.verify(dataset)?;
        if !report.pass {
            return Err(RegistryError::IntegrityFailure {
                dataset: dataset.clone(),
                files: report.failed_files(),
            });
        }
        let dir = self.dataset_dir(dataset);
        let events_csv = fs::read(dir.join(EVENTS_FILE))?;
        let labels_csv = fs::read(dir.join(LABELS_FILE))?;
        let (events, labels) = check_contents(&events_csv, &labels_csv)?;
        let card = self
            .index()?
            .entry(dataset)
            .map(|e| e.card.clone())
            .ok_or_else(|| RegistryError::UnknownDataset(dataset.to_string()))?;
        Ok(StoredDataset {
            dataset: dataset.clone(),
            card,
            events,
            labels,
        })
    }
}

fn version_key(text: &str) -> Option<Version> {
    Version::parse(text).ok()
}

fn check_contents(events_csv: &[u8], labels_csv: &[u8]) -> Result<(Vec<EventRecord>, Vec<PlayerLabel>), RegistryError> {
    let parsed = parse_events(events_csv).map_err(|e| RegistryError::ValidationFailed {
        message: format!("events file: {e}"),
        report: None,
    })?;
    if !parsed.is_clean() {
        let report = parsed.report();
        return Err(RegistryError::ValidationFailed {
            message: format!(
                "events file has {} invalid rows; first: {}",
                report.errors.len(),
                report.errors[0]
            ),
            report: Some(Box::new(report)),
        });
    }
    let labels = parse_labels(labels_csv).map_err(|e| RegistryError::ValidationFailed {
        message: format!("labels file: {e}"),
        report: None,
    })?;
    let mut labeled = HashSet::with_capacity(labels.len());
    for label in &labels {
        if !labeled.insert(label.player_id.as_str()) {
            return Err(RegistryError::ValidationFailed {
                message: format!("player {} is labeled more than once", label.player_id),
                report: None,
            });
        }
    }
    let active: HashSet<&str> = parsed.events.iter().map(|e| e.player_id.as_str()).collect();
    if let Some(orphan) = labeled.iter().find(|p| !active.contains(*p)) {
        return Err(RegistryError::ValidationFailed {
            message: format!("labeled player {orphan} has no events"),
            report: None,
        });
    }
    if let Some(unlabeled) = active.iter().find(|p| !labeled.contains(*p)) {
        return Err(RegistryError::ValidationFailed {
            message: format!("player {unlabeled} has events but no label"),
            report: None,
        });
    }
    Ok((parsed.events, labels))
}

/// `RISKBENCH_HOME`, else `$XDG_DATA_HOME/riskbench`, else
/// `~/.local/share/riskbench`.
pub fn default_home() -> PathBuf {
    if let Some(home) = std::env::var_os(HOME_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(home);
    }
    if let Some(data) = std::env::var_os("XDG_DATA_HOME").filter(|v| !v.is_empty()) {
        return PathBuf::from(data).join("riskbench");
    }
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".local").join("share").join("riskbench"),
        None => PathBuf::from(".riskbench"),
    }
}
