use serde::{Deserialize, Serialize};

use crate::canonical::text_enum;
use crate::registry::{DatasetCard, DatasetRef};

use super::rules::{LabelRule, TaskKind};
use super::split::SplitSpec;
use super::TaskError;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
pub const DEFAULT_SPLIT_SALT: &str = "riskbench-split-v1";
pub const DEFAULT_DECISION_THRESHOLD: f64 = 0.5;

text_enum!(
    PrimaryMetric {
        Auc => "AUC",
        F1 => "F1",
        MacroF1 => "MACRO_F1",
    }
);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelHorizon {
    pub description: String,
    pub days: u32,
}

fn default_threshold() -> f64 {
    DEFAULT_DECISION_THRESHOLD
}

/// Everything needed to turn a dataset into a task, deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub task_id: String,
    pub name: String,
    pub dataset: DatasetRef,
    pub label_rule: LabelRule,
    /// Days of activity kept per player, counted from the first event.
    pub observation_window_days: u32,
    pub label_horizon: LabelHorizon,
    pub split: SplitSpec,
    pub primary_metric: PrimaryMetric,
    /// Submissions with score at or above this are predicted positive.
    #[serde(default = "default_threshold")]
    pub decision_threshold: f64,
    /// Canonical column used for the per-cohort breakdown.
    #[serde(default)]
    pub cohort_field: Option<String>,
}

impl TaskSpec {
    pub fn kind(&self) -> TaskKind {
        self.label_rule.kind
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let invalid = |msg: String| Err(TaskError::InvalidSpec(msg));
        if !valid_task_id(&self.task_id) {
            return invalid(format!(
                "task_id {:?} must be 1-64 characters of letters, digits, '-', '_' or '.'",
                self.task_id
            ));
        }
        self.label_rule.validate()?;
        self.split.validate()?;
        if self.observation_window_days == 0 {
            return invalid("observation_window_days must be positive".into());
        }
        let metric_fits = match self.kind() {
            TaskKind::Binary => matches!(self.primary_metric, PrimaryMetric::Auc | PrimaryMetric::F1),
            TaskKind::Multiclass => self.primary_metric == PrimaryMetric::MacroF1,
        };
        if !metric_fits {
            return invalid(format!("{} is not a primary metric for {} tasks", self.primary_metric, self.kind()));
        }
        if !(0.0..=1.0).contains(&self.decision_threshold) {
            return invalid(format!("decision_threshold {} is outside [0, 1]", self.decision_threshold));
        }
        if let Some(field) = &self.cohort_field {
            if field != "cohort" {
                return invalid(format!("cohort_field {field:?} is not supported; use \"cohort\""));
            }
        }
        Ok(())
    }

    pub fn card(&self) -> TaskCard {
        TaskCard {
            task_id: self.task_id.clone(),
            dataset: self.dataset.to_string(),
            kind: self.kind(),
            window_days: self.observation_window_days,
            horizon: self.label_horizon.clone(),
            primary_metric: self.primary_metric,
            classes: self.label_rule.classes(),
        }
    }
}

pub fn valid_task_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

/// Public summary written as `task_card.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCard {
    pub task_id: String,
    pub dataset: String,
    pub kind: TaskKind,
    pub window_days: u32,
    pub horizon: LabelHorizon,
    pub primary_metric: PrimaryMetric,
    pub classes: Vec<String>,
}

/// A built-in task definition that can be applied to any dataset.
#[derive(Debug, Clone)]
pub struct TaskTemplate {
    pub id: &'static str,
    pub name: &'static str,
    /// `None` keeps the dataset's whole horizon.
    pub window_days: Option<u32>,
    pub rule: fn() -> LabelRule,
    pub primary_metric: PrimaryMetric,
}

fn vse_with_tenure() -> LabelRule {
    LabelRule::vse(14)
}

pub const TEMPLATES: [TaskTemplate; 7] = [
    TaskTemplate {
        id: "B1",
        name: "7 day detection",
        window_days: Some(7),
        rule: LabelRule::pgsi_binary,
        primary_metric: PrimaryMetric::Auc,
    },
    TaskTemplate {
        id: "B2",
        name: "1 day detection",
        window_days: Some(1),
        rule: LabelRule::pgsi_binary,
        primary_metric: PrimaryMetric::Auc,
    },
    TaskTemplate {
        id: "U1",
        name: "Universal detection",
        window_days: None,
        rule: LabelRule::pgsi_binary,
        primary_metric: PrimaryMetric::Auc,
    },
    TaskTemplate {
        id: "U2",
        name: "Severity buckets",
        window_days: None,
        rule: LabelRule::pgsi_buckets,
        primary_metric: PrimaryMetric::MacroF1,
    },
    TaskTemplate {
        id: "V1",
        name: "Self-exclusion",
        window_days: None,
        rule: vse_with_tenure,
        primary_metric: PrimaryMetric::Auc,
    },
    TaskTemplate {
        id: "L1",
        name: "Lottery detection",
        window_days: None,
        rule: LabelRule::pgsi_binary,
        primary_metric: PrimaryMetric::Auc,
    },
    TaskTemplate {
        id: "H1",
        name: "Engaged detection",
        window_days: None,
        rule: LabelRule::pgsi_binary,
        primary_metric: PrimaryMetric::Auc,
    },
];

pub fn template(id: &str) -> Option<&'static TaskTemplate> {
    TEMPLATES.iter().find(|t| t.id.eq_ignore_ascii_case(id))
}

impl TaskTemplate {
    /// Instantiates the template for a registered dataset with the default
    /// split and a per-cohort breakdown.
    pub fn spec_for(&self, dataset: &DatasetRef, card: &DatasetCard) -> TaskSpec {
        let horizon = card.dimensions.time_horizon.days;
        let rule = (self.rule)();
        let what = match (rule.source, rule.kind) {
            (_, TaskKind::Multiclass) => "PGSI severity bucket",
            (crate::synthgen::LabelSource::Vse, _) => "voluntary self-exclusion",
            _ => "PGSI at-risk status",
        };
        TaskSpec {
            task_id: self.id.to_string(),
            name: self.name.to_string(),
            dataset: dataset.clone(),
            label_rule: rule,
            observation_window_days: self.window_days.unwrap_or(horizon),
            label_horizon: LabelHorizon {
                description: format!("{what} assessed at the end of the {horizon}-day dataset horizon"),
                days: horizon,
            },
            split: SplitSpec::player_hash(DEFAULT_TRAIN_FRACTION, DEFAULT_SPLIT_SALT),
            primary_metric: self.primary_metric,
            decision_threshold: DEFAULT_DECISION_THRESHOLD,
            cohort_field: Some("cohort".to_string()),
        }
    }
}
