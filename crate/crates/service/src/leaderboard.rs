use std::cmp::Ordering;

use riskbench_core::canonical::Timestamp;
use riskbench_core::scoring::{Metric, PrimaryValue};
use serde::{Deserialize, Serialize};

use crate::badge::Badge;
use crate::ledger::SubmissionRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub submitter: String,
    pub primary_metric: PrimaryValue,
    pub badge: Badge,
    pub submission_id: String,
    pub received_at: Timestamp,
}

/// Higher metric first, UNDEFINED last, then earlier receipt, then id.
pub fn compare_records(a: &SubmissionRecord, b: &SubmissionRecord) -> Ordering {
    let by_metric = match (a.primary_value(), b.primary_value()) {
        (Metric::Value(x), Metric::Value(y)) => y.total_cmp(&x),
        (Metric::Value(_), Metric::Undefined) => Ordering::Less,
        (Metric::Undefined, Metric::Value(_)) => Ordering::Greater,
        (Metric::Undefined, Metric::Undefined) => Ordering::Equal,
    };
    by_metric
        .then_with(|| a.received_at.cmp(&b.received_at))
        .then_with(|| a.submission_id.cmp(&b.submission_id))
}

/// Ranks every record of a ledger. A pure function of the records.
pub fn rank(records: &[SubmissionRecord]) -> Vec<LeaderboardEntry> {
    let mut sorted: Vec<&SubmissionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| compare_records(a, b));
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| LeaderboardEntry {
            rank: i + 1,
            submitter: r.submitter.clone(),
            primary_metric: r.report.primary_metric.clone(),
            badge: r.badge,
            submission_id: r.submission_id.clone(),
            received_at: r.received_at,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::tests::record;

    #[test]
    fn orders_by_metric_then_time() {
        let mut a = record("T1-000001".into(), 0.8);
        let b = record("T1-000002".into(), 0.9);
        let c = record("T1-000003".into(), 0.7);
        let mut d = record("T1-000004".into(), 0.0);
        d.report.primary_metric.value = Metric::Undefined;
        a.received_at = Timestamp::from_unix(1);
        let board = rank(&[d, c, b, a]);
        let ids: Vec<_> = board.iter().map(|e| (e.rank, e.submission_id.as_str())).collect();
        assert_eq!(ids, [(1, "T1-000002"), (2, "T1-000001"), (3, "T1-000003"), (4, "T1-000004")]);
    }

    #[test]
    fn ties_go_to_the_earlier_submission() {
        let mut late = record("T1-000001".into(), 0.8);
        let mut early = record("T1-000002".into(), 0.8);
        late.received_at = Timestamp::from_unix(200);
        early.received_at = Timestamp::from_unix(100);
        let board = rank(&[late, early]);
        assert_eq!(board[0].submission_id, "T1-000002");
        assert!(rank(&[]).is_empty());
    }
}
