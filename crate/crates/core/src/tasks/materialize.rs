use std::collections::{BTreeMap, HashMap};

use crate::canonical::{EventRecord, SECONDS_PER_DAY};
use crate::registry::StoredDataset;
use crate::synthgen::PlayerLabel;

use super::bundle::{AnswerKey, TaskBundle, TrainLabel};
use super::spec::TaskSpec;
use super::TaskError;

/// Builds the bundle for `spec` from a loaded dataset.
///
/// Each player's events are cut to those starting less than
/// `observation_window_days` after that player's first event, for train and
/// test players alike. Players shorter-tenured than the rule's
/// `min_tenure_days` (measured on the full history) are left out.
pub fn materialize(spec: &TaskSpec, dataset: &StoredDataset) -> Result<TaskBundle, TaskError> {
    spec.validate()?;
    if spec.dataset != dataset.dataset {
        return Err(TaskError::InvalidSpec(format!(
            "spec targets {} but dataset {} was supplied",
            spec.dataset, dataset.dataset
        )));
    }
    let horizon = dataset.card.dimensions.time_horizon.days;
    if spec.observation_window_days > horizon {
        return Err(TaskError::WindowExceedsHorizon {
            window_days: spec.observation_window_days,
            horizon_days: horizon,
        });
    }

    let mut by_player: BTreeMap<&str, Vec<&EventRecord>> = BTreeMap::new();
    for event in &dataset.events {
        by_player.entry(event.player_id.as_str()).or_default().push(event);
    }
    for events in by_player.values_mut() {
        events.sort_by_key(|e| e.start_time);
    }
    let labels: HashMap<&str, &PlayerLabel> = dataset.labels.iter().map(|l| (l.player_id.as_str(), l)).collect();

    let window = i64::from(spec.observation_window_days) * SECONDS_PER_DAY;
    let min_tenure = i64::from(spec.label_rule.min_tenure_days) * SECONDS_PER_DAY;
    let mut train_events = Vec::new();
    let mut train_labels = Vec::new();
    let mut test_events = Vec::new();
    let mut key = BTreeMap::new();
    for (player, events) in by_player {
        let label = labels
            .get(player)
            .ok_or_else(|| TaskError::InvalidSpec(format!("player {player} has no label")))?;
        let first = events[0].start_time;
        let last = events[events.len() - 1].start_time;
        if last.seconds_since(first) < min_tenure {
            continue;
        }
        let target = spec.label_rule.target(label)?;
        let kept = events
            .into_iter()
            .filter(|e| e.start_time.seconds_since(first) < window)
            .cloned();
        if spec.split.is_train(player) {
            train_events.extend(kept);
            train_labels.push(TrainLabel {
                label: (*label).clone(),
                target,
            });
        } else {
            test_events.extend(kept);
            key.insert(player.to_string(), target);
        }
    }
    if key.is_empty() {
        return Err(TaskError::EmptyTestSet);
    }

    let bundle = TaskBundle {
        spec: spec.clone(),
        card: spec.card(),
        train_events,
        train_labels,
        test_events,
        answer_key: AnswerKey::new(key),
    };
    bundle.check_invariants()?;
    Ok(bundle)
}
