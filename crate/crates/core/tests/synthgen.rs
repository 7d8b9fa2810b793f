mod common;

use std::collections::BTreeMap;

use riskbench_core::canonical::{events_to_csv, validate_events, SECONDS_PER_DAY};
use riskbench_core::fsutil::to_json_bytes;
use riskbench_core::synthgen::{generate, labels_to_csv, preset, SynthError, PRESET_NAMES};

use common::small;

#[test]
fn same_config_gives_identical_bytes() {
    let config = small("universal", 300);
    let (a, b) = (generate(&config).unwrap(), generate(&config).unwrap());
    assert_eq!(events_to_csv(&a.events), events_to_csv(&b.events));
    assert_eq!(labels_to_csv(&a.labels), labels_to_csv(&b.labels));
    assert_eq!(to_json_bytes(&a.card), to_json_bytes(&b.card));
    assert_eq!(to_json_bytes(&a.manifest), to_json_bytes(&b.manifest));
}

#[test]
fn a_different_seed_changes_the_data() {
    let mut config = small("universal", 200);
    let a = generate(&config).unwrap();
    config.seed += 1;
    assert_ne!(events_to_csv(&a.events), events_to_csv(&generate(&config).unwrap().events));
}

#[test]
fn prevalence_is_exact_and_consistent_with_scores() {
    for (n, prevalence) in [(1000, 0.1), (333, 0.25), (50, 0.0), (40, 1.0), (7, 0.5)] {
        let mut config = small("universal", n);
        config.prevalence = prevalence;
        let data = generate(&config).unwrap();
        let flagged = data.labels.iter().filter(|l| l.risk_flag == 1).count() as u32;
        assert_eq!(flagged, (prevalence * f64::from(n)).round() as u32, "n={n} p={prevalence}");
        let threshold = data.manifest.label_allocation.pgsi_threshold;
        for label in &data.labels {
            assert_eq!(label.risk_flag == 1, label.pgsi_score.unwrap() >= threshold, "{}", label.player_id);
        }
    }
}

#[test]
fn a_players_events_do_not_depend_on_population_size() {
    let events_of = |n: u32| {
        let data = generate(&small("lottery", n)).unwrap();
        data.events.into_iter().filter(|e| e.player_id.as_str() < "P0000051").collect::<Vec<_>>()
    };
    assert_eq!(events_of(100), events_of(400));
}

#[test]
fn events_are_valid_sorted_and_inside_the_horizon() {
    for name in PRESET_NAMES {
        let config = small(name, 150);
        let data = generate(&config).unwrap();
        assert!(validate_events(&data.events).errors.is_empty(), "{name}");
        assert!(data
            .events
            .windows(2)
            .all(|w| (&w[0].player_id, w[0].start_time) <= (&w[1].player_id, w[1].start_time)));
        let mut span: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
        for e in &data.events {
            let t = e.start_time.unix();
            let s = span.entry(&e.player_id).or_insert((t, t));
            s.0 = s.0.min(t);
            s.1 = s.1.max(t);
        }
        let horizon = i64::from(config.time_horizon_days) * SECONDS_PER_DAY;
        assert!(span.values().all(|(lo, hi)| hi - lo < horizon), "{name}");
        assert_eq!(data.card.size, data.events.len() as u64);
        assert_eq!(data.manifest.counts.players, 150);
    }
}

#[test]
fn every_player_has_a_label_and_the_labels_are_unique() {
    let data = generate(&small("highly_engaged", 200)).unwrap();
    let ids: Vec<&str> = data.labels.iter().map(|l| l.player_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.dedup();
    assert_eq!(ids.len(), 200);
    assert_eq!(sorted.len(), 200);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut config = small("universal", 10);
    config.prevalence = 1.5;
    assert!(matches!(generate(&config), Err(SynthError::InvalidConfig(_))));
    let mut config = small("universal", 10);
    config.n_players = 0;
    assert!(matches!(generate(&config), Err(SynthError::InvalidConfig(_))));
    let mut config = small("universal", 10);
    config.signal_strength = f64::NAN;
    assert!(matches!(generate(&config), Err(SynthError::InvalidConfig(_))));
    assert!(matches!(preset("poker"), Err(SynthError::UnknownPreset(_))));
}

#[test]
fn config_json_round_trips() {
    use riskbench_core::synthgen::SyntheticConfig;
    for name in PRESET_NAMES {
        let config = preset(name).unwrap();
        assert_eq!(SyntheticConfig::from_json(&config.to_json()).unwrap(), config);
    }
}
