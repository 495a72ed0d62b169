//! Classification and regression metrics over annotated vs. predicted CTR.
//!
//! Labels on both sides come from [`binary_label`]. Pairs whose prediction
//! failed (a structure was not detected) are counted separately and kept out
//! of the confusion matrix and the regression errors.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::ctr::{binary_label, fmt4, Label};
use crate::error::{Error, Result};
use crate::types::BinaryMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub id: String,
    pub annotated_ctr: f64,
    /// `None` marks a detection failure.
    pub predicted_ctr: Option<f64>,
}

impl EvalPair {
    pub fn new(id: impl Into<String>, annotated_ctr: f64, predicted_ctr: Option<f64>) -> Self {
        Self {
            id: id.into(),
            annotated_ctr,
            predicted_ctr,
        }
    }

    pub fn abs_error(&self) -> Option<f64> {
        self.predicted_ctr.map(|p| (p - self.annotated_ctr).abs())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub failures: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_ + self.failures
    }
}

pub fn confusion(pairs: &[EvalPair]) -> Result<ConfusionCounts> {
    if pairs.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut counts = ConfusionCounts::default();
    for pair in pairs {
        let Some(predicted) = pair.predicted_ctr else {
            counts.failures += 1;
            continue;
        };
        match (binary_label(pair.annotated_ctr), binary_label(predicted)) {
            (Label::Positive, Label::Positive) => counts.tp += 1,
            (Label::Negative, Label::Positive) => counts.fp += 1,
            (Label::Negative, Label::Negative) => counts.tn += 1,
            (Label::Positive, Label::Negative) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

/// Rates with cardiomegaly as the positive class. `None` when the
/// denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(counts: &ConfusionCounts) -> ClassificationMetrics {
    let c = counts;
    ClassificationMetrics {
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// Number of successful pairs the errors were averaged over.
    pub count: usize,
}

pub fn regression_metrics(pairs: &[EvalPair]) -> Result<RegressionMetrics> {
    let errors: Vec<f64> = pairs
        .iter()
        .filter_map(|p| p.predicted_ctr.map(|pred| pred - p.annotated_ctr))
        .collect();
    if errors.is_empty() {
        return Err(Error::NoSuccessfulPairs);
    }
    let n = errors.len() as f64;
    let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / n;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    Ok(RegressionMetrics {
        mae,
        rmse,
        count: errors.len(),
    })
}

/// One row of the annotated-vs-predicted scatter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub id: String,
    pub annotated_ctr: f64,
    pub predicted_ctr: Option<f64>,
    pub annotated_label: Label,
    pub predicted_label: Option<Label>,
    pub abs_error: Option<f64>,
}

pub const SCATTER_COLUMNS: [&str; 6] = [
    "id",
    "annotated_ctr",
    "predicted_ctr",
    "annotated_label",
    "predicted_label",
    "abs_error",
];

pub fn scatter_export(pairs: &[EvalPair]) -> Vec<ScatterRow> {
    pairs
        .iter()
        .map(|p| ScatterRow {
            id: p.id.clone(),
            annotated_ctr: p.annotated_ctr,
            predicted_ctr: p.predicted_ctr,
            annotated_label: binary_label(p.annotated_ctr),
            predicted_label: p.predicted_ctr.map(binary_label),
            abs_error: p.abs_error(),
        })
        .collect()
}

/// Writes scatter rows as CSV with a fixed header. Values keep full
/// precision so the file parses back to the same pairs; failures leave the
/// prediction columns empty.
pub fn write_scatter_csv<W: io::Write>(rows: &[ScatterRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| Error::io("scatter csv", io::Error::other(e));
    w.write_record(SCATTER_COLUMNS).map_err(to_io)?;
    for row in rows {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            row.id.clone(),
            row.annotated_ctr.to_string(),
            opt(row.predicted_ctr),
            row.annotated_label.to_string(),
            row.predicted_label.map(|l| l.to_string()).unwrap_or_default(),
            opt(row.abs_error),
        ])
        .map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io("scatter csv", e))?;
    Ok(())
}

/// Parses a scatter CSV back into evaluation pairs.
pub fn read_scatter_csv<R: io::Read>(reader: R) -> Result<Vec<EvalPair>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| Error::MalformedDocument(format!("scatter csv: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != SCATTER_COLUMNS {
        return Err(Error::MalformedDocument(format!(
            "scatter csv header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::MalformedDocument(format!("scatter csv value {s:?}: {e}")))
    };
    let mut pairs = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| Error::MalformedDocument(format!("scatter csv: {e}")))?;
        let predicted = match &record[2] {
            "" => None,
            s => Some(parse(s)?),
        };
        pairs.push(EvalPair::new(&record[0], parse(&record[1])?, predicted));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: ConfusionCounts,
    pub classification: ClassificationMetrics,
    /// `None` when every prediction failed.
    pub regression: Option<RegressionMetrics>,
    pub rows: Vec<ScatterRow>,
}

pub fn evaluate(pairs: &[EvalPair]) -> Result<EvalReport> {
    let counts = confusion(pairs)?;
    let regression = match regression_metrics(pairs) {
        Ok(r) => Some(r),
        Err(Error::NoSuccessfulPairs) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        counts,
        classification: metrics(&counts),
        regression,
        rows: scatter_export(pairs),
    })
}

impl EvalReport {
    /// `key = value` text, ratios rounded to four decimals, `n/a` for
    /// undefined values.
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt4).unwrap_or_else(|| "n/a".into());
        let c = &self.counts;
        let mut s = String::new();
        let _ = writeln!(s, "pairs = {}", c.total());
        let _ = writeln!(s, "tp = {}", c.tp);
        let _ = writeln!(s, "fp = {}", c.fp);
        let _ = writeln!(s, "tn = {}", c.tn);
        let _ = writeln!(s, "fn = {}", c.fn_);
        let _ = writeln!(s, "failures = {}", c.failures);
        let _ = writeln!(s, "sensitivity = {}", opt(self.classification.sensitivity));
        let _ = writeln!(s, "specificity = {}", opt(self.classification.specificity));
        let _ = writeln!(s, "f1 = {}", opt(self.classification.f1));
        let _ = writeln!(s, "mae = {}", opt(self.regression.map(|r| r.mae)));
        let _ = writeln!(s, "rmse = {}", opt(self.regression.map(|r| r.rmse)));
        s
    }
}

/// Dice overlap `2|A ∩ B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice(predicted: &BinaryMask, truth: &BinaryMask) -> Result<f64> {
    if !predicted.same_shape(truth) {
        return Err(Error::ShapeMismatch("dice of differently shaped masks".into()));
    }
    let (mut both, mut total) = (0usize, 0usize);
    for (a, b) in predicted.data().iter().zip(truth.data()) {
        both += usize::from(*a != 0 && *b != 0);
        total += usize::from(*a != 0) + usize::from(*b != 0);
    }
    Ok(if total == 0 {
        1.0
    } else {
        2.0 * both as f64 / total as f64
    })
}
