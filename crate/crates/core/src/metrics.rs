//! Confusion matrix and per-class rates.
//!
//! Rates are kept as integer fractions and only turned into floats for
//! display. A rate with a zero denominator is undefined and reported as
//! such, never as 0 or NaN.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landmark::SentenceClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
}

/// Counts indexed `[true class][predicted class]` in the order (AS, ST).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_pairs(
        truth: &[SentenceClass],
        predicted: &[SentenceClass],
    ) -> Result<Self, MetricsError> {
        if truth.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                predictions: predicted.len(),
                labels: truth.len(),
            });
        }
        let mut m = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            m.record(*t, *p);
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: SentenceClass, predicted: SentenceClass) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }

    /// One-vs-rest rates with `class` as the positive class.
    pub fn rates(&self, class: SentenceClass) -> ClassRates {
        let (c, o) = (class.index(), class.other().index());
        let tp = self.counts[c][c];
        let fn_ = self.counts[c][o];
        let fp = self.counts[o][c];
        let tn = self.counts[o][o];
        ClassRates {
            class,
            tpr: Rate::new(tp, tp + fn_),
            fpr: Rate::new(fp, fp + tn),
            tnr: Rate::new(tn, fp + tn),
            fnr: Rate::new(fn_, tp + fn_),
        }
    }
}

/// An exact fraction; `None` when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub numerator: u64,
    pub denominator: u64,
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64) -> Option<Self> {
        (denominator > 0).then_some(Self {
            numerator,
            denominator,
        })
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    /// True when `self + other == 1` exactly.
    pub fn complements(&self, other: &Rate) -> bool {
        self.denominator == other.denominator
            && self.numerator + other.numerator == self.denominator
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRates {
    pub class: SentenceClass,
    pub tpr: Option<Rate>,
    pub fpr: Option<Rate>,
    pub tnr: Option<Rate>,
    pub fnr: Option<Rate>,
}

impl ClassRates {
    /// `TPR + FNR = 1` and `FPR + TNR = 1` hold exactly wherever defined.
    pub fn identities_hold(&self) -> bool {
        let pair = |a: Option<Rate>, b: Option<Rate>| match (a, b) {
            (Some(a), Some(b)) => a.complements(&b),
            (None, None) => true,
            _ => false,
        };
        pair(self.tpr, self.fnr) && pair(self.fpr, self.tnr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub per_class: [ClassRates; 2],
    pub accuracy: Rate,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Result<Self, MetricsError> {
        let accuracy =
            Rate::new(confusion.correct(), confusion.total()).ok_or(MetricsError::EmptyTestSet)?;
        Ok(Self {
            per_class: SentenceClass::ALL.map(|c| confusion.rates(c)),
            confusion,
            accuracy,
        })
    }

    pub fn from_predictions(
        truth: &[SentenceClass],
        predicted: &[SentenceClass],
    ) -> Result<Self, MetricsError> {
        Self::from_confusion(ConfusionMatrix::from_pairs(truth, predicted)?)
    }

    /// Machine-readable form with full-precision values alongside the exact fractions.
    pub fn to_json(&self) -> serde_json::Value {
        let rate = |r: Option<Rate>| match r {
            Some(r) => serde_json::json!({
                "value": r.value(),
                "numerator": r.numerator,
                "denominator": r.denominator,
            }),
            None => serde_json::json!({ "value": null, "undefined": true }),
        };
        let per_class: Vec<_> = self
            .per_class
            .iter()
            .map(|c| {
                serde_json::json!({
                    "class": c.class,
                    "tpr": rate(c.tpr),
                    "fpr": rate(c.fpr),
                    "tnr": rate(c.tnr),
                    "fnr": rate(c.fnr),
                })
            })
            .collect();
        serde_json::json!({
            "class_order": SentenceClass::ALL,
            "confusion": self.confusion.counts,
            "total": self.confusion.total(),
            "accuracy": rate(Some(self.accuracy)),
            "per_class": per_class,
        })
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cell = |r: Option<Rate>| r.map_or_else(|| "undef".to_string(), |r| r.to_string());
        writeln!(
            f,
            "{:<6}{:>8}{:>8}{:>8}{:>8}",
            "Class", "TPR", "FPR", "TNR", "FNR"
        )?;
        for c in &self.per_class {
            writeln!(
                f,
                "{:<6}{:>8}{:>8}{:>8}{:>8}",
                c.class.as_str(),
                cell(c.tpr),
                cell(c.fpr),
                cell(c.tnr),
                cell(c.fnr)
            )?;
        }
        writeln!(
            f,
            "accuracy {} ({}/{})",
            self.accuracy, self.accuracy.numerator, self.accuracy.denominator
        )?;
        let m = &self.confusion.counts;
        writeln!(
            f,
            "confusion (rows true, cols predicted): AS [{} {}] ST [{} {}]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}
