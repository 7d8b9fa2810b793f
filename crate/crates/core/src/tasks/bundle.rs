use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::canonical::{events_to_csv, parse_events, EventRecord, SECONDS_PER_DAY};
use crate::fsutil::{temp_sibling, to_json_bytes};
use crate::synthgen::{LabelSource, PlayerLabel, LABEL_HEADER};

use super::spec::{valid_task_id, TaskCard, TaskSpec};
use super::TaskError;

pub const TRAIN_EVENTS_FILE: &str = "train_events.csv";
pub const TRAIN_LABELS_FILE: &str = "train_labels.csv";
pub const TEST_EVENTS_FILE: &str = "test_events.csv";
pub const TASK_CARD_FILE: &str = "task_card.json";
pub const TASK_SPEC_FILE: &str = "task_spec.json";
pub const PRIVATE_DIR: &str = "private";
pub const ANSWER_KEY_FILE: &str = "answer_key.csv";

/// Files a participant receives.
pub const PUBLIC_FILES: [&str; 5] = [
    TRAIN_EVENTS_FILE,
    TRAIN_LABELS_FILE,
    TEST_EVENTS_FILE,
    TASK_CARD_FILE,
    TASK_SPEC_FILE,
];

/// A training player's labels together with the derived target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainLabel {
    pub label: PlayerLabel,
    pub target: String,
}

/// Hidden targets of the test players.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnswerKey {
    entries: BTreeMap<String, String>,
}

impl AnswerKey {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        Self { entries }
    }

    pub fn get(&self, player_id: &str) -> Option<&str> {
        self.entries.get(player_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, t)| (p.as_str(), t.as_str()))
    }

    pub fn players(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = b"player_id,target\n".to_vec();
        for (player, target) in &self.entries {
            out.extend_from_slice(format!("{player},{target}\n").as_bytes());
        }
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, TaskError> {
        let mut reader = csv::Reader::from_reader(bytes);
        if reader.headers()?.iter().collect::<Vec<_>>() != ["player_id", "target"] {
            return Err(TaskError::CorruptBundle("answer key header must be player_id,target".into()));
        }
        let mut entries = BTreeMap::new();
        for record in reader.records() {
            let record = record?;
            if entries.insert(record[0].to_string(), record[1].to_string()).is_some() {
                return Err(TaskError::CorruptBundle(format!("answer key repeats {}", &record[0])));
            }
        }
        Ok(Self { entries })
    }
}

#[derive(Debug, Clone)]
pub struct TaskBundle {
    pub spec: TaskSpec,
    pub card: TaskCard,
    pub train_events: Vec<EventRecord>,
    pub train_labels: Vec<TrainLabel>,
    pub test_events: Vec<EventRecord>,
    pub answer_key: AnswerKey,
}

impl TaskBundle {
    pub fn test_players(&self) -> BTreeSet<&str> {
        self.test_events.iter().map(|e| e.player_id.as_str()).collect()
    }

    /// Cohort of each test player, taken from their first test event.
    pub fn test_cohorts(&self) -> BTreeMap<String, String> {
        let mut cohorts = BTreeMap::new();
        for event in &self.test_events {
            cohorts
                .entry(event.player_id.clone())
                .or_insert_with(|| event.cohort.clone());
        }
        cohorts
    }

    /// Checks disjointness, key coverage and window truncation; returns the
    /// first violation.
    pub fn check_invariants(&self) -> Result<(), TaskError> {
        let broken = |msg: String| Err(TaskError::CorruptBundle(msg));
        let train: HashSet<&str> = self.train_labels.iter().map(|l| l.label.player_id.as_str()).collect();
        let test = self.test_players();
        if let Some(p) = test.iter().find(|p| train.contains(*p)) {
            return broken(format!("player {p} is in both train and test"));
        }
        if let Some(e) = self.train_events.iter().find(|e| !train.contains(e.player_id.as_str())) {
            return broken(format!("train events include unlabeled player {}", e.player_id));
        }
        if !test.iter().copied().eq(self.answer_key.players()) {
            return broken("answer key players differ from test event players".into());
        }
        let limit = i64::from(self.spec.observation_window_days) * SECONDS_PER_DAY;
        for events in [&self.train_events, &self.test_events] {
            let mut first = BTreeMap::new();
            let mut last = BTreeMap::new();
            for e in events.iter() {
                let f = first.entry(e.player_id.as_str()).or_insert(e.start_time);
                *f = (*f).min(e.start_time);
                let l = last.entry(e.player_id.as_str()).or_insert(e.start_time);
                *l = (*l).max(e.start_time);
            }
            for (player, start) in &first {
                if last[player].seconds_since(*start) >= limit {
                    return broken(format!("events of {player} exceed the observation window"));
                }
            }
        }
        Ok(())
    }

    fn train_labels_csv(&self) -> Vec<u8> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header: Vec<&str> = LABEL_HEADER.to_vec();
        header.push("target");
        writer.write_record(&header).expect("in-memory write");
        let opt = |v: Option<u8>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.train_labels {
            let l = &row.label;
            writer
                .write_record([
                    l.player_id.clone(),
                    opt(l.pgsi_score),
                    opt(l.vse_flag),
                    l.risk_flag.to_string(),
                    l.label_source.to_string(),
                    l.cohort.clone(),
                    row.target.clone(),
                ])
                .expect("in-memory write");
        }
        writer.into_inner().expect("in-memory flush")
    }

    /// Writes the bundle to `tasks_root/<task_id>` through a staging
    /// directory. An existing bundle is only replaced when its spec is
    /// identical or `force` is set.
    pub fn publish(&self, tasks_root: &Path, force: bool) -> Result<PathBuf, TaskError> {
        let final_dir = tasks_root.join(&self.spec.task_id);
        let spec_bytes = to_json_bytes(&self.spec);
        if final_dir.exists() && !force {
            let existing = fs::read(final_dir.join(TASK_SPEC_FILE)).unwrap_or_default();
            if existing != spec_bytes {
                return Err(TaskError::TaskExists(self.spec.task_id.clone()));
            }
        }
        fs::create_dir_all(tasks_root)?;
        let staging = temp_sibling(&final_dir);
        fs::create_dir_all(staging.join(PRIVATE_DIR))?;
        restrict(&staging.join(PRIVATE_DIR))?;
        fs::write(staging.join(TRAIN_EVENTS_FILE), events_to_csv(&self.train_events))?;
        fs::write(staging.join(TRAIN_LABELS_FILE), self.train_labels_csv())?;
        fs::write(staging.join(TEST_EVENTS_FILE), events_to_csv(&self.test_events))?;
        fs::write(staging.join(TASK_CARD_FILE), to_json_bytes(&self.card))?;
        fs::write(staging.join(TASK_SPEC_FILE), spec_bytes)?;
        fs::write(staging.join(PRIVATE_DIR).join(ANSWER_KEY_FILE), self.answer_key.to_csv())?;
        if final_dir.exists() {
            let retired = temp_sibling(&final_dir);
            fs::rename(&final_dir, &retired)?;
            fs::rename(&staging, &final_dir)?;
            fs::remove_dir_all(retired)?;
        } else {
            fs::rename(&staging, &final_dir)?;
        }
        Ok(final_dir)
    }

    /// Reads a published bundle, including its private answer key.
    pub fn load(dir: &Path) -> Result<Self, TaskError> {
        let spec: TaskSpec = read_json(&dir.join(TASK_SPEC_FILE))?;
        let card: TaskCard = read_json(&dir.join(TASK_CARD_FILE))?;
        let events = |name: &str| -> Result<Vec<EventRecord>, TaskError> {
            let bytes = fs::read(dir.join(name))?;
            parse_events(&bytes[..])
                .and_then(|p| p.into_strict())
                .map_err(|e| TaskError::CorruptBundle(format!("{name}: {e}")))
        };
        let train_events = events(TRAIN_EVENTS_FILE)?;
        let test_events = events(TEST_EVENTS_FILE)?;
        let train_labels = parse_train_labels(&fs::read(dir.join(TRAIN_LABELS_FILE))?)?;
        let answer_key = AnswerKey::parse(&fs::read(dir.join(PRIVATE_DIR).join(ANSWER_KEY_FILE))?)?;
        Ok(Self {
            spec,
            card,
            train_events,
            train_labels,
            test_events,
            answer_key,
        })
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, TaskError> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| TaskError::CorruptBundle(format!("{}: {e}", path.display())))
}

fn parse_train_labels(bytes: &[u8]) -> Result<Vec<TrainLabel>, TaskError> {
    // Reuse the strict label parser on the label columns, then pair the targets.
    let mut reader = csv::Reader::from_reader(bytes);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.len() != LABEL_HEADER.len() + 1 || header.last().map(String::as_str) != Some("target") {
        return Err(TaskError::CorruptBundle("train_labels.csv lacks a trailing target column".into()));
    }
    let mut label_part = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut targets = Vec::new();
    label_part.write_record(&header[..LABEL_HEADER.len()])?;
    for record in reader.records() {
        let record = record?;
        let fields: Vec<&str> = record.iter().collect();
        label_part.write_record(&fields[..LABEL_HEADER.len()])?;
        targets.push(fields[LABEL_HEADER.len()].to_string());
    }
    let label_bytes = label_part
        .into_inner()
        .map_err(|e| TaskError::CorruptBundle(e.to_string()))?;
    let labels = crate::synthgen::parse_labels(&label_bytes[..])
        .map_err(|e| TaskError::CorruptBundle(format!("train_labels.csv: {e}")))?;
    Ok(labels
        .into_iter()
        .zip(targets)
        .map(|(label, target)| TrainLabel { label, target })
        .collect())
}

#[cfg(unix)]
fn restrict(dir: &Path) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    fs::set_permissions(dir, fs::Permissions::from_mode(0o700))
}

#[cfg(not(unix))]
fn restrict(_dir: &Path) -> std::io::Result<()> {
    Ok(())
}

/// Public cards of all published tasks, ordered by task id.
pub fn list_tasks(tasks_root: &Path) -> Result<Vec<TaskCard>, TaskError> {
    let mut cards = Vec::new();
    let entries = match fs::read_dir(tasks_root) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cards),
        Err(e) => return Err(e.into()),
    };
    for entry in entries {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if !valid_task_id(&name) || !entry.path().join(TASK_CARD_FILE).is_file() {
            continue;
        }
        cards.push(read_json::<TaskCard>(&entry.path().join(TASK_CARD_FILE))?);
    }
    cards.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    Ok(cards)
}

/// Directory of a published task.
pub fn task_dir(tasks_root: &Path, task_id: &str) -> Result<PathBuf, TaskError> {
    let dir = tasks_root.join(task_id);
    if !valid_task_id(task_id) || !dir.join(TASK_SPEC_FILE).is_file() {
        return Err(TaskError::UnknownTask(task_id.to_string()));
    }
    Ok(dir)
}

/// Scans the public files of a published bundle for answer-key material.
/// Returns one message per finding; empty means clean.
pub fn scan_for_leaks(dir: &Path) -> Result<Vec<String>, TaskError> {
    let key = AnswerKey::parse(&fs::read(dir.join(PRIVATE_DIR).join(ANSWER_KEY_FILE))?)?;
    let mut findings = Vec::new();
    let needles: Vec<String> = key.iter().map(|(p, t)| format!("{p},{t}")).collect();
    for name in PUBLIC_FILES {
        let text = String::from_utf8_lossy(&fs::read(dir.join(name))?).into_owned();
        let lines: HashSet<&str> = text.lines().collect();
        if let Some(needle) = needles.iter().find(|n| lines.contains(n.as_str())) {
            findings.push(format!("{name} contains answer key row {needle}"));
        }
    }

    let labels = fs::read(dir.join(TRAIN_LABELS_FILE))?;
    let mut reader = csv::Reader::from_reader(&labels[..]);
    for record in reader.records() {
        let record = record?;
        if key.get(&record[0]).is_some() {
            findings.push(format!("{TRAIN_LABELS_FILE} labels test player {}", &record[0]));
        }
    }

    let test = fs::read(dir.join(TEST_EVENTS_FILE))?;
    let mut reader = csv::Reader::from_reader(&test[..]);
    let label_columns = [
        "target",
        "risk_flag",
        "pgsi_score",
        "vse_flag",
        "label_source",
        LabelSource::Pgsi.as_str(),
    ];
    for column in reader.headers()?.iter() {
        if label_columns.iter().any(|c| c.eq_ignore_ascii_case(column)) {
            findings.push(format!("{TEST_EVENTS_FILE} has label column {column}"));
        }
    }

    for name in [TASK_CARD_FILE, TASK_SPEC_FILE] {
        let text = String::from_utf8_lossy(&fs::read(dir.join(name))?).into_owned();
        if let Some(player) = key.players().find(|p| text.contains(p)) {
            findings.push(format!("{name} mentions test player {player}"));
        }
    }
    Ok(findings)
}
