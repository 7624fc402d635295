use std::fmt::Write;

use crate::error::Result;
use crate::metrics::{confusion_metrics, pr_auc, roc_auc, Confusion};

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub name: String,
    pub count: usize,
    /// `None` when the test set has a single class.
    pub auroc: Option<f64>,
    /// `None` when the test set has no positives.
    pub auprc: Option<f64>,
    pub f1: f64,
    pub sensitivity: f64,
    pub precision: f64,
    pub threshold: f64,
    pub confusion: Confusion,
}

impl FoldReport {
    /// Metrics of `scores` against `labels` at a fixed threshold.
    pub fn compute(name: &str, scores: &[f64], labels: &[f64], threshold: f64) -> Result<Self> {
        let m = confusion_metrics(scores, labels, threshold)?;
        Ok(Self {
            name: name.to_string(),
            count: scores.len(),
            auroc: roc_auc(scores, labels).ok(),
            auprc: pr_auc(scores, labels).ok(),
            f1: m.f1,
            sensitivity: m.sensitivity,
            precision: m.precision,
            threshold,
            confusion: m.confusion,
        })
    }
}

/// Per-fold metrics plus their means (undefined folds are left out of the
/// AUROC/AUPRC means) and pooled confusion counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
    pub f1: f64,
    pub sensitivity: f64,
    pub precision: f64,
    /// The fold threshold for a single fold; `None` when folds differ.
    pub threshold: Option<f64>,
    pub confusion: Confusion,
    pub per_fold: Vec<FoldReport>,
}

fn mean(vals: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.16e}"))
}

impl EvaluationReport {
    pub fn from_folds(per_fold: Vec<FoldReport>) -> Self {
        let threshold = match per_fold.as_slice() {
            [only] => Some(only.threshold),
            _ => None,
        };
        Self {
            auroc: mean(per_fold.iter().filter_map(|f| f.auroc)),
            auprc: mean(per_fold.iter().filter_map(|f| f.auprc)),
            f1: mean(per_fold.iter().map(|f| f.f1)).unwrap_or(0.0),
            sensitivity: mean(per_fold.iter().map(|f| f.sensitivity)).unwrap_or(0.0),
            precision: mean(per_fold.iter().map(|f| f.precision)).unwrap_or(0.0),
            threshold,
            confusion: per_fold.iter().fold(Confusion::default(), |acc, f| acc.add(&f.confusion)),
            per_fold,
        }
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        let mut s = String::new();
        let _ = writeln!(s, "folds = {}", self.per_fold.len());
        let _ = writeln!(s, "evaluated = {}", c.total());
        let _ = writeln!(s, "auroc = {}", opt(self.auroc));
        let _ = writeln!(s, "auprc = {}", opt(self.auprc));
        let _ = writeln!(s, "f1 = {:.16e}", self.f1);
        let _ = writeln!(s, "sensitivity = {:.16e}", self.sensitivity);
        let _ = writeln!(s, "precision = {:.16e}", self.precision);
        let _ = writeln!(s, "threshold = {}", self.threshold.map_or("per-fold".into(), |t| format!("{t:.16e}")));
        let _ = writeln!(s, "tp = {}\nfp = {}\ntn = {}\nfn = {}", c.tp, c.fp, c.tn, c.fn_);
        s
    }

    pub fn folds_csv(&self) -> String {
        let mut s = String::from("fold,count,auroc,auprc,f1,sensitivity,precision,threshold,tp,fp,tn,fn\n");
        for f in &self.per_fold {
            let c = &f.confusion;
            let _ = writeln!(
                s,
                "{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{}",
                f.name,
                f.count,
                opt(f.auroc),
                opt(f.auprc),
                f.f1,
                f.sensitivity,
                f.precision,
                f.threshold,
                c.tp,
                c.fp,
                c.tn,
                c.fn_
            );
        }
        s
    }
}

/// Parses `key = value` text back into a map; used to read reports.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
