use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical::Timestamp;
use crate::tasks::{PrimaryMetric, TaskBundle, TaskKind};

use super::metrics::{no_information_rate, roc_auc, BinaryConfusion, BinaryMetrics, Metric, MulticlassConfusion};
use super::submission::{Prediction, PredictionSet};
use super::ScoringError;

/// Figures that put accuracy in context. Required in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceContext {
    /// Share of test players outside the no-risk class.
    pub prevalence: f64,
    pub no_information_rate: f64,
    /// Accuracy of predicting the no-risk class for everyone.
    pub all_negative_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimaryValue {
    pub name: PrimaryMetric,
    pub value: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Confusion {
    Binary(BinaryConfusion),
    Multiclass(MulticlassConfusion),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortRow {
    pub cohort: String,
    pub n_players: u64,
    /// Binary view of the cohort's predictions (any risk versus none for
    /// multiclass tasks).
    pub confusion: BinaryConfusion,
    #[serde(flatten)]
    pub metrics: BinaryMetrics,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub macro_f1: Option<Metric>,
    #[serde(flatten)]
    pub context: PrevalenceContext,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreReport {
    pub task_id: String,
    pub dataset: String,
    pub kind: TaskKind,
    pub primary_metric: PrimaryValue,
    pub decision_threshold: f64,
    pub n_players: u64,
    pub confusion: Confusion,
    pub accuracy: Metric,
    pub sensitivity: Metric,
    pub specificity: Metric,
    pub precision: Metric,
    pub f1: Metric,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub auc: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub macro_f1: Option<Metric>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_class_recall: Option<BTreeMap<String, Metric>>,
    pub prevalence: f64,
    pub no_information_rate: f64,
    pub all_negative_accuracy: f64,
    pub cohort_field: Option<String>,
    pub cohorts: Vec<CohortRow>,
    pub submission_sha256: String,
    pub scored_at: Timestamp,
}

impl ScoreReport {
    pub fn context(&self) -> PrevalenceContext {
        PrevalenceContext {
            prevalence: self.prevalence,
            no_information_rate: self.no_information_rate,
            all_negative_accuracy: self.all_negative_accuracy,
        }
    }

    /// Canonical JSON encoding; identical inputs give identical bytes.
    pub fn to_json(&self) -> Vec<u8> {
        crate::fsutil::to_json_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }
}

struct Slice {
    binary: BinaryConfusion,
    multiclass: Option<MulticlassConfusion>,
    scored: Vec<(f64, bool)>,
    truth: Vec<String>,
}

impl Slice {
    fn context(&self, classes: &[String]) -> PrevalenceContext {
        let negatives = self.truth.iter().filter(|t| **t == classes[0]).count() as f64;
        let n = self.truth.len() as f64;
        let (prevalence, all_negative_accuracy) = if n == 0.0 { (0.0, 0.0) } else { (1.0 - negatives / n, negatives / n) };
        PrevalenceContext {
            prevalence,
            no_information_rate: no_information_rate(self.truth.iter().map(String::as_str)),
            all_negative_accuracy,
        }
    }

    fn auc(&self) -> Option<Metric> {
        if self.multiclass.is_some() {
            return None;
        }
        Some(match roc_auc(&self.scored) {
            Ok(v) => Metric::Value(v),
            Err(_) => Metric::Undefined,
        })
    }
}

/// Scores a validated prediction set against the bundle's answer key.
pub fn score(preds: &PredictionSet, bundle: &TaskBundle, scored_at: Timestamp) -> Result<ScoreReport, ScoringError> {
    let spec = &bundle.spec;
    let kind = spec.kind();
    if preds.kind != kind {
        return Err(ScoringError::KindMismatch);
    }
    let classes = &bundle.card.classes;
    let class_index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let cohorts = bundle.test_cohorts();
    let threshold = spec.decision_threshold;

    let new_slice = || Slice {
        binary: BinaryConfusion::default(),
        multiclass: (kind == TaskKind::Multiclass).then(|| MulticlassConfusion::new(classes.clone())),
        scored: Vec::new(),
        truth: Vec::new(),
    };
    let mut pooled = new_slice();
    let mut by_cohort: BTreeMap<String, Slice> = BTreeMap::new();
    for (player, target) in bundle.answer_key.iter() {
        let prediction = preds
            .predictions
            .get(player)
            .ok_or_else(|| ScoringError::MissingPlayers(vec![player.to_string()]))?;
        let actual = *class_index
            .get(target)
            .ok_or_else(|| ScoringError::CorruptKey(format!("target {target:?} is not a task class")))?;
        let mut slices = vec![&mut pooled];
        let cohort_slice = spec
            .cohort_field
            .as_ref()
            .map(|_| by_cohort.entry(cohorts.get(player).cloned().unwrap_or_default()).or_insert_with(new_slice));
        slices.extend(cohort_slice);
        for slice in slices {
            slice.truth.push(target.to_string());
            match prediction {
                Prediction::Score(s) => {
                    slice.binary.add(*s >= threshold, actual != 0);
                    slice.scored.push((*s, actual != 0));
                }
                Prediction::Class(c) => {
                    let predicted = class_index[c.as_str()];
                    slice.binary.add(predicted != 0, actual != 0);
                    if let Some(m) = slice.multiclass.as_mut() {
                        m.add(actual, predicted);
                    }
                }
            }
        }
    }

    let metrics = pooled.binary.metrics();
    let auc = pooled.auc();
    let (macro_f1, per_class_recall, confusion, accuracy) = match &pooled.multiclass {
        Some(m) => (
            Some(m.macro_f1()),
            Some((0..classes.len()).map(|c| (classes[c].clone(), m.recall(c))).collect()),
            Confusion::Multiclass(m.clone()),
            m.accuracy(),
        ),
        None => (None, None, Confusion::Binary(pooled.binary), metrics.accuracy),
    };
    let primary = match spec.primary_metric {
        PrimaryMetric::Auc => auc.unwrap_or(Metric::Undefined),
        PrimaryMetric::F1 => metrics.f1,
        PrimaryMetric::MacroF1 => macro_f1.unwrap_or(Metric::Undefined),
    };
    let context = pooled.context(classes);
    let cohort_rows = by_cohort
        .into_iter()
        .map(|(cohort, slice)| CohortRow {
            n_players: slice.truth.len() as u64,
            confusion: slice.binary,
            metrics: slice.binary.metrics(),
            auc: slice.auc(),
            macro_f1: slice.multiclass.as_ref().map(MulticlassConfusion::macro_f1),
            context: slice.context(classes),
            cohort,
        })
        .collect();

    Ok(ScoreReport {
        task_id: spec.task_id.clone(),
        dataset: spec.dataset.to_string(),
        kind,
        primary_metric: PrimaryValue {
            name: spec.primary_metric,
            value: primary,
        },
        decision_threshold: threshold,
        n_players: pooled.truth.len() as u64,
        confusion,
        accuracy,
        sensitivity: metrics.sensitivity,
        specificity: metrics.specificity,
        precision: metrics.precision,
        f1: metrics.f1,
        auc,
        macro_f1,
        per_class_recall,
        prevalence: context.prevalence,
        no_information_rate: context.no_information_rate,
        all_negative_accuracy: context.all_negative_accuracy,
        cohort_field: spec.cohort_field.clone(),
        cohorts: cohort_rows,
        submission_sha256: preds.checksum.clone(),
        scored_at,
    })
}
