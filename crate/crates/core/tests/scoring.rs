mod common;

use std::collections::BTreeMap;

use riskbench_core::canonical::{Activity, Timestamp, TransactionStatus};
use riskbench_core::scoring::{
    roc_auc, score, validate_submission, write_submission, BinaryConfusion, Confusion, Metric, Prediction,
    ScoreReport, ScoringError,
};
use riskbench_core::tasks::TaskBundle;

use common::task;

fn at() -> Timestamp {
    Timestamp::parse("2026-01-01T00:00:00Z").unwrap()
}

/// Share of a player's deposits that were declined.
fn declined_rate(bundle: &TaskBundle) -> BTreeMap<String, Prediction> {
    let mut counts: BTreeMap<String, (u32, u32)> = bundle.test_players().iter().map(|p| (p.to_string(), (0, 0))).collect();
    for e in &bundle.test_events {
        if let Activity::Deposit(t) = &e.activity {
            let c = counts.get_mut(&e.player_id).unwrap();
            c.1 += 1;
            c.0 += u32::from(t.status == TransactionStatus::Declined);
        }
    }
    counts
        .into_iter()
        .map(|(p, (d, n))| (p, Prediction::Score(if n == 0 { 0.0 } else { f64::from(d) / f64::from(n) })))
        .collect()
}

fn file(bundle: &TaskBundle, preds: &BTreeMap<String, Prediction>) -> Vec<u8> {
    write_submission(bundle.spec.kind(), preds.iter().map(|(p, v)| (p.as_str(), v)))
}

fn binary_file(rows: &[(&str, &str)]) -> Vec<u8> {
    let mut text = String::from("player_id,score\n");
    for (p, s) in rows {
        text.push_str(&format!("{p},{s}\n"));
    }
    text.into_bytes()
}

#[test]
fn three_missing_players_are_named() {
    let (_home, _registry, bundle) = task("universal", 200, "U1");
    let players: Vec<&str> = bundle.test_players().into_iter().collect();
    let rows: Vec<(&str, &str)> = players[3..].iter().map(|p| (*p, "0.5")).collect();
    match validate_submission(&binary_file(&rows), &bundle) {
        Err(ScoringError::MissingPlayers(missing)) => assert_eq!(missing, players[..3]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn out_of_range_score_is_a_bad_value_on_its_row() {
    let (_home, _registry, bundle) = task("universal", 200, "U1");
    let players: Vec<&str> = bundle.test_players().into_iter().collect();
    let mut rows: Vec<(&str, &str)> = players.iter().map(|p| (*p, "0.5")).collect();
    rows[4].1 = "1.2";
    assert!(matches!(
        validate_submission(&binary_file(&rows), &bundle),
        Err(ScoringError::BadValue { row: 4, .. })
    ));
    rows[4].1 = "NaN";
    assert!(matches!(validate_submission(&binary_file(&rows), &bundle), Err(ScoringError::BadValue { row: 4, .. })));
}

#[test]
fn header_duplicates_and_strangers_are_rejected() {
    let (_home, _registry, bundle) = task("universal", 200, "U1");
    let players: Vec<&str> = bundle.test_players().into_iter().collect();
    let mut rows: Vec<(&str, &str)> = players.iter().map(|p| (*p, "0.1")).collect();
    let text = String::from_utf8(binary_file(&rows)).unwrap().replacen("score", "prob", 1);
    assert!(matches!(validate_submission(text.as_bytes(), &bundle), Err(ScoringError::BadHeader { .. })));

    rows.push((players[0], "0.2"));
    assert!(matches!(
        validate_submission(&binary_file(&rows), &bundle),
        Err(ScoringError::DuplicatePlayer { row, .. }) if row == players.len()
    ));

    rows.pop();
    rows.push(("NOBODY", "0.2"));
    assert_eq!(
        validate_submission(&binary_file(&rows), &bundle),
        Err(ScoringError::UnknownPlayers(vec!["NOBODY".into()]))
    );
}

#[test]
fn report_matches_an_independent_count() {
    let (_home, _registry, bundle) = task("universal", 400, "U1");
    let preds = declined_rate(&bundle);
    let set = validate_submission(&file(&bundle, &preds), &bundle).unwrap();
    let report = score(&set, &bundle, at()).unwrap();

    let pairs: Vec<(f64, bool)> = bundle
        .answer_key
        .iter()
        .map(|(p, t)| match &set.predictions[p] {
            Prediction::Score(s) => (*s, t == "1"),
            Prediction::Class(_) => unreachable!(),
        })
        .collect();
    let mut tp = 0;
    let mut total = 0;
    for &(s, y) in &pairs {
        total += 1;
        tp += u64::from(s >= 0.5 && y);
    }
    let Confusion::Binary(c) = report.confusion else { panic!("binary task") };
    assert_eq!(c.tp, tp);
    assert_eq!(c.total(), total);
    assert_eq!(report.auc, Some(Metric::Value(roc_auc(&pairs).unwrap())));
    assert_eq!(report.primary_metric.value, report.auc.unwrap());
    let positives = pairs.iter().filter(|p| p.1).count() as f64;
    assert_eq!(report.prevalence, positives / total as f64);
    assert_eq!(report.all_negative_accuracy, 1.0 - report.prevalence);
    assert_eq!(report.no_information_rate, report.prevalence.max(1.0 - report.prevalence));
}

#[test]
fn cohort_confusions_add_up_to_the_total() {
    let (_home, _registry, bundle) = task("universal", 400, "U1");
    let set = validate_submission(&file(&bundle, &declined_rate(&bundle)), &bundle).unwrap();
    let report = score(&set, &bundle, at()).unwrap();
    assert!(report.cohorts.len() > 1);
    let sum = report
        .cohorts
        .iter()
        .fold(BinaryConfusion::default(), |acc, row| acc.merge(&row.confusion));
    let Confusion::Binary(total) = report.confusion else { panic!("binary task") };
    assert_eq!(sum, total);
    assert_eq!(report.cohorts.iter().map(|c| c.n_players).sum::<u64>(), report.n_players);
}

#[test]
fn reports_are_deterministic_apart_from_the_timestamp() {
    let (_home, _registry, bundle) = task("universal", 200, "U1");
    let bytes = file(&bundle, &declined_rate(&bundle));
    let a = score(&validate_submission(&bytes, &bundle).unwrap(), &bundle, at()).unwrap();
    let b = score(&validate_submission(&bytes, &bundle).unwrap(), &bundle, at()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let later = score(&validate_submission(&bytes, &bundle).unwrap(), &bundle, at().plus_seconds(60)).unwrap();
    assert_eq!(ScoreReport { scored_at: at(), ..later }.to_json(), a.to_json());
    assert_eq!(ScoreReport::from_json(&a.to_json()).unwrap(), a);
}

#[test]
fn a_report_without_prevalence_context_does_not_parse() {
    let (_home, _registry, bundle) = task("universal", 200, "U1");
    let set = validate_submission(&file(&bundle, &declined_rate(&bundle)), &bundle).unwrap();
    let json = score(&set, &bundle, at()).unwrap().to_json();
    for field in ["prevalence", "no_information_rate", "all_negative_accuracy"] {
        let mut value: serde_json::Value = serde_json::from_slice(&json).unwrap();
        value.as_object_mut().unwrap().remove(field);
        assert!(ScoreReport::from_json(value.to_string().as_bytes()).is_err(), "{field}");
    }
}

#[test]
fn all_negative_submission_is_reported_in_context() {
    let (_home, _registry, bundle) = task("universal", 300, "U1");
    let preds: BTreeMap<String, Prediction> =
        bundle.test_players().iter().map(|p| (p.to_string(), Prediction::Score(0.0))).collect();
    let report = score(&validate_submission(&file(&bundle, &preds), &bundle).unwrap(), &bundle, at()).unwrap();
    assert_eq!(report.accuracy, Metric::Value(report.all_negative_accuracy));
    assert_eq!(report.sensitivity, Metric::Value(0.0));
    assert!(report.precision.is_undefined());
    assert!(report.f1.is_undefined());
    assert_eq!(report.auc, Some(Metric::Value(0.5)));
    let json: serde_json::Value = serde_json::from_slice(&report.to_json()).unwrap();
    assert_eq!(json["precision"], "UNDEFINED");
}

#[test]
fn multiclass_submission_scores_macro_f1() {
    let (_home, _registry, bundle) = task("universal", 300, "U2");
    let truth: BTreeMap<String, Prediction> =
        bundle.answer_key.iter().map(|(p, c)| (p.to_string(), Prediction::Class(c.to_string()))).collect();
    let report = score(&validate_submission(&file(&bundle, &truth), &bundle).unwrap(), &bundle, at()).unwrap();
    assert_eq!(report.accuracy, Metric::Value(1.0));
    assert_eq!(report.primary_metric.value, report.macro_f1.unwrap());
    assert_eq!(report.macro_f1, Some(Metric::Value(1.0)));
    assert!(report.auc.is_none());

    let players: Vec<&str> = bundle.test_players().into_iter().collect();
    let text = format!("player_id,class\n{},severe\n", players[0]);
    assert!(matches!(validate_submission(text.as_bytes(), &bundle), Err(ScoringError::BadValue { row: 0, .. })));
}
