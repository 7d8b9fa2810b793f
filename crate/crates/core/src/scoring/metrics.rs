use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ScoringError;

pub const UNDEFINED: &str = "UNDEFINED";

/// A metric value, or `Undefined` when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    Undefined,
}

impl Metric {
    pub fn ratio(numerator: u64, denominator: u64) -> Self {
        if denominator == 0 {
            Metric::Undefined
        } else {
            Metric::Value(numerator as f64 / denominator as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        matches!(self, Metric::Undefined)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Value(v) => write!(f, "{v:.4}"),
            Metric::Undefined => f.write_str(UNDEFINED),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str(UNDEFINED),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Metric::Value(v)),
            Raw::Text(t) if t == UNDEFINED => Ok(Metric::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or {UNDEFINED}, got {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryConfusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryConfusion {
    /// Counts predictions `score >= threshold` against boolean truth.
    pub fn from_scores(pairs: impl IntoIterator<Item = (f64, bool)>, threshold: f64) -> Self {
        let mut c = Self::default();
        for (score, actual) in pairs {
            c.add(score >= threshold, actual);
        }
        c
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn metrics(&self) -> BinaryMetrics {
        let sensitivity = Metric::ratio(self.tp, self.tp + self.fn_);
        let precision = Metric::ratio(self.tp, self.tp + self.fp);
        // Harmonic mean of precision and sensitivity, defined whenever both are.
        let f1 = match (precision, sensitivity) {
            (Metric::Value(_), Metric::Value(_)) => Metric::ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
            _ => Metric::Undefined,
        };
        BinaryMetrics {
            accuracy: Metric::ratio(self.tp + self.tn, self.total()),
            sensitivity,
            specificity: Metric::ratio(self.tn, self.tn + self.fp),
            precision,
            f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: Metric,
    pub sensitivity: Metric,
    pub specificity: Metric,
    pub precision: Metric,
    pub f1: Metric,
}

/// Area under the ROC curve via the Mann-Whitney statistic with average
/// ranks, so tied scores count one half.
pub fn roc_auc(pairs: &[(f64, bool)]) -> Result<f64, ScoringError> {
    let positives = pairs.iter().filter(|p| p.1).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(ScoringError::SingleClassKey);
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| pairs[a].0.total_cmp(&pairs[b].0));
    // Ranks are multiples of 0.5 and sums stay far below 2^52, so this is exact.
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pairs[order[j + 1]].0 == pairs[order[i]].0 {
            j += 1;
        }
        let average_rank = (i + j) as f64 / 2.0 + 1.0;
        let tied_positives = order[i..=j].iter().filter(|&&k| pairs[k].1).count();
        positive_rank_sum += average_rank * tied_positives as f64;
        i = j + 1;
    }
    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

/// Frequency of the most common class. An empty key yields 0.
pub fn no_information_rate<'a>(key: impl IntoIterator<Item = &'a str>) -> f64 {
    let mut counts = std::collections::HashMap::new();
    let mut total = 0u64;
    for class in key {
        *counts.entry(class).or_insert(0u64) += 1;
        total += 1;
    }
    match counts.values().max() {
        Some(&max) => max as f64 / total as f64,
        None => 0.0,
    }
}

/// k-by-k counts; rows are actual classes, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MulticlassConfusion {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl MulticlassConfusion {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        Self {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.counts[actual][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (row, other_row) in out.counts.iter_mut().zip(&other.counts) {
            for (cell, o) in row.iter_mut().zip(other_row) {
                *cell += o;
            }
        }
        out
    }

    pub fn accuracy(&self) -> Metric {
        let diagonal = (0..self.classes.len()).map(|i| self.counts[i][i]).sum();
        Metric::ratio(diagonal, self.total())
    }

    /// One-vs-rest counts for class `c`.
    pub fn one_vs_rest(&self, c: usize) -> BinaryConfusion {
        let mut out = BinaryConfusion::default();
        for (a, row) in self.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                match (p == c, a == c) {
                    (true, true) => out.tp += n,
                    (true, false) => out.fp += n,
                    (false, false) => out.tn += n,
                    (false, true) => out.fn_ += n,
                }
            }
        }
        out
    }

    pub fn recall(&self, c: usize) -> Metric {
        self.one_vs_rest(c).metrics().sensitivity
    }

    /// Mean F1 over the classes whose F1 is defined.
    pub fn macro_f1(&self) -> Metric {
        let defined: Vec<f64> = (0..self.classes.len())
            .filter_map(|c| self.one_vs_rest(c).metrics().f1.value())
            .collect();
        if defined.is_empty() {
            Metric::Undefined
        } else {
            Metric::Value(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }

    /// Collapses to "first class" versus "any other class".
    pub fn any_risk(&self) -> BinaryConfusion {
        let mut out = BinaryConfusion::default();
        for (a, row) in self.counts.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                match (p != 0, a != 0) {
                    (true, true) => out.tp += n,
                    (true, false) => out.fp += n,
                    (false, false) => out.tn += n,
                    (false, true) => out.fn_ += n,
                }
            }
        }
        out
    }
}
