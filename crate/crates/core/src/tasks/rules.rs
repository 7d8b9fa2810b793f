use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::canonical::text_enum;
use crate::synthgen::{LabelSource, PlayerLabel, PGSI_MAX};

use super::TaskError;

pub const DEFAULT_PGSI_THRESHOLD: u8 = 5;

text_enum!(
    TaskKind {
        Binary => "BINARY",
        Multiclass => "MULTICLASS",
    }
);

/// Inclusive PGSI score range carrying a class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bucket {
    pub label: String,
    pub min: u8,
    pub max: u8,
}

impl Bucket {
    fn new(label: &str, min: u8, max: u8) -> Self {
        Self {
            label: label.to_string(),
            min,
            max,
        }
    }

    pub fn contains(&self, score: u8) -> bool {
        (self.min..=self.max).contains(&score)
    }
}

/// Default severity buckets: 0, 1-2, 3-4, 5-7, 8+.
pub fn default_buckets() -> Vec<Bucket> {
    vec![
        Bucket::new("0", 0, 0),
        Bucket::new("1-2", 1, 2),
        Bucket::new("3-4", 3, 4),
        Bucket::new("5-7", 5, 7),
        Bucket::new("8+", 8, PGSI_MAX),
    ]
}

fn default_threshold() -> u8 {
    DEFAULT_PGSI_THRESHOLD
}

fn check_score(score: u8) -> Result<(), TaskError> {
    if score > PGSI_MAX {
        return Err(TaskError::OutOfRange(format!("PGSI score {score} is outside 0-{PGSI_MAX}")));
    }
    Ok(())
}

/// 1 iff `score >= threshold`.
pub fn pgsi_to_binary(score: u8, threshold: u8) -> Result<u8, TaskError> {
    check_score(score)?;
    if !(1..=PGSI_MAX).contains(&threshold) {
        return Err(TaskError::OutOfRange(format!("threshold {threshold} is outside 1-{PGSI_MAX}")));
    }
    Ok(u8::from(score >= threshold))
}

/// Label of the default bucket containing `score`.
pub fn pgsi_to_bucket(score: u8) -> Result<String, TaskError> {
    bucket_for(score, &default_buckets()).map(str::to_string)
}

pub fn bucket_for(score: u8, buckets: &[Bucket]) -> Result<&str, TaskError> {
    check_score(score)?;
    buckets
        .iter()
        .find(|b| b.contains(score))
        .map(|b| b.label.as_str())
        .ok_or_else(|| TaskError::OutOfRange(format!("no bucket contains PGSI score {score}")))
}

/// How a task's target is derived from a player's labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRule {
    pub source: LabelSource,
    pub kind: TaskKind,
    #[serde(default = "default_threshold")]
    pub binary_threshold: u8,
    #[serde(default = "default_buckets")]
    pub buckets: Vec<Bucket>,
    /// Players whose recorded play spans fewer days are left out of the task.
    #[serde(default)]
    pub min_tenure_days: u32,
}

impl LabelRule {
    pub fn pgsi_binary() -> Self {
        Self {
            source: LabelSource::Pgsi,
            kind: TaskKind::Binary,
            binary_threshold: DEFAULT_PGSI_THRESHOLD,
            buckets: default_buckets(),
            min_tenure_days: 0,
        }
    }

    pub fn pgsi_buckets() -> Self {
        Self {
            kind: TaskKind::Multiclass,
            ..Self::pgsi_binary()
        }
    }

    pub fn vse(min_tenure_days: u32) -> Self {
        Self {
            source: LabelSource::Vse,
            min_tenure_days,
            ..Self::pgsi_binary()
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let invalid = |msg: String| Err(TaskError::InvalidSpec(msg));
        if !(1..=PGSI_MAX).contains(&self.binary_threshold) {
            return invalid(format!("binary_threshold {} is outside 1-{PGSI_MAX}", self.binary_threshold));
        }
        let mut next = 0u16;
        let mut labels = HashSet::new();
        for bucket in &self.buckets {
            if bucket.label.trim().is_empty() || !labels.insert(bucket.label.as_str()) {
                return invalid(format!("bucket label {:?} is empty or repeated", bucket.label));
            }
            if u16::from(bucket.min) != next || bucket.max < bucket.min {
                return invalid(format!(
                    "bucket {} must start at {next} and not end before it starts",
                    bucket.label
                ));
            }
            next = u16::from(bucket.max) + 1;
        }
        if next != u16::from(PGSI_MAX) + 1 {
            return invalid(format!("buckets must cover 0-{PGSI_MAX} exactly"));
        }
        if self.kind == TaskKind::Multiclass && self.source != LabelSource::Pgsi {
            return invalid(format!("multiclass targets need PGSI scores, not {}", self.source));
        }
        Ok(())
    }

    /// Class labels in reporting order; the first one is the no-risk class.
    pub fn classes(&self) -> Vec<String> {
        match self.kind {
            TaskKind::Binary => vec!["0".to_string(), "1".to_string()],
            TaskKind::Multiclass => self.buckets.iter().map(|b| b.label.clone()).collect(),
        }
    }

    /// Target of one player. Fails when the label lacks the field the rule reads.
    pub fn target(&self, label: &PlayerLabel) -> Result<String, TaskError> {
        let missing = || TaskError::LabelSourceMissing {
            label_source: self.source,
            player_id: label.player_id.clone(),
        };
        match (self.source, self.kind) {
            (LabelSource::Pgsi, TaskKind::Binary) => {
                let score = label.pgsi_score.ok_or_else(missing)?;
                Ok(pgsi_to_binary(score, self.binary_threshold)?.to_string())
            }
            (LabelSource::Pgsi, TaskKind::Multiclass) => {
                let score = label.pgsi_score.ok_or_else(missing)?;
                Ok(bucket_for(score, &self.buckets)?.to_string())
            }
            (LabelSource::Vse, TaskKind::Binary) => Ok(label.vse_flag.ok_or_else(missing)?.to_string()),
            (LabelSource::BehavioralThreshold, TaskKind::Binary) => Ok(label.risk_flag.to_string()),
            (_, TaskKind::Multiclass) => Err(TaskError::InvalidSpec(format!(
                "multiclass targets need PGSI scores, not {}",
                self.source
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_examples() {
        assert_eq!(pgsi_to_bucket(0).unwrap(), "0");
        assert_eq!(pgsi_to_bucket(3).unwrap(), "3-4");
        assert_eq!(pgsi_to_bucket(27).unwrap(), "8+");
        assert!(matches!(pgsi_to_bucket(28), Err(TaskError::OutOfRange(_))));
    }

    #[test]
    fn binary_boundary() {
        assert_eq!(pgsi_to_binary(5, 5).unwrap(), 1);
        assert_eq!(pgsi_to_binary(4, 5).unwrap(), 0);
        assert_eq!(pgsi_to_binary(0, 5).unwrap(), 0);
        assert!(pgsi_to_binary(3, 0).is_err());
    }

    #[test]
    fn gapped_or_overlapping_buckets_are_rejected() {
        let mut rule = LabelRule::pgsi_buckets();
        assert!(rule.validate().is_ok());
        rule.buckets[1].max = 3;
        assert!(rule.validate().is_err());
        rule.buckets = default_buckets();
        rule.buckets.pop();
        assert!(rule.validate().is_err());
    }

    #[test]
    fn vse_rule_needs_the_flag() {
        let label = PlayerLabel {
            player_id: "P1".into(),
            pgsi_score: Some(9),
            vse_flag: None,
            risk_flag: 1,
            label_source: LabelSource::Pgsi,
            cohort: String::new(),
        };
        assert!(matches!(
            LabelRule::vse(0).target(&label),
            Err(TaskError::LabelSourceMissing { .. })
        ));
        assert_eq!(LabelRule::pgsi_buckets().target(&label).unwrap(), "8+");
    }
}
