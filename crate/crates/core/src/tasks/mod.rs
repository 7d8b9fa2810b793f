//! Benchmark tasks: label rules, player splits, observation windows and
//! bundle publication.

mod bundle;
mod materialize;
mod rules;
mod spec;
mod split;

use std::path::PathBuf;

pub use bundle::{
    list_tasks, scan_for_leaks, task_dir, AnswerKey, TaskBundle, TrainLabel, ANSWER_KEY_FILE, PRIVATE_DIR,
    PUBLIC_FILES, TASK_CARD_FILE, TASK_SPEC_FILE, TEST_EVENTS_FILE, TRAIN_EVENTS_FILE, TRAIN_LABELS_FILE,
};
pub use materialize::materialize;
pub use rules::{
    bucket_for, default_buckets, pgsi_to_binary, pgsi_to_bucket, Bucket, LabelRule, TaskKind, DEFAULT_PGSI_THRESHOLD,
};
pub use spec::{
    template, valid_task_id, LabelHorizon, PrimaryMetric, TaskCard, TaskSpec, TaskTemplate, DEFAULT_DECISION_THRESHOLD,
    DEFAULT_SPLIT_SALT, DEFAULT_TRAIN_FRACTION, TEMPLATES,
};
pub use split::{split_players, SplitMethod, SplitSpec};

use crate::registry::{Registry, RegistryError};
use crate::synthgen::LabelSource;

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("invalid task spec: {0}")]
    InvalidSpec(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("observation window of {window_days} days exceeds the dataset horizon of {horizon_days} days")]
    WindowExceedsHorizon { window_days: u32, horizon_days: u32 },
    #[error("the split leaves no test players")]
    EmptyTestSet,
    #[error("label rule reads {label_source} but player {player_id} has no such label")]
    LabelSourceMissing { label_source: LabelSource, player_id: String },
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("task {0} already exists with a different spec")]
    TaskExists(String),
    #[error("task bundle is damaged: {0}")]
    CorruptBundle(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("malformed CSV in task bundle: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads the spec's dataset from the registry (verifying checksums),
/// materializes it and publishes the bundle under the registry's task root.
pub fn materialize_registered(registry: &Registry, spec: &TaskSpec, force: bool) -> Result<(TaskBundle, PathBuf), TaskError> {
    spec.validate()?;
    let dataset = registry.load(&spec.dataset)?;
    let bundle = materialize(spec, &dataset)?;
    let dir = bundle.publish(&registry.tasks_root(), force)?;
    Ok((bundle, dir))
}

/// Loads a published task by id.
pub fn load_task(registry: &Registry, task_id: &str) -> Result<TaskBundle, TaskError> {
    TaskBundle::load(&task_dir(&registry.tasks_root(), task_id)?)
}
