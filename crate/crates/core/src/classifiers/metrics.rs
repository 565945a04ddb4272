//! Test-set evaluation: confusion matrix, accuracy, per-class TPR/FNR, timings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use super::model::TrainedModel;
use crate::error::{Error, Result};
use crate::protocol::Dataset;
use crate::ClassTag;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Method label, e.g. "knn".
    pub method: String,
    /// Selector label, e.g. "mrmr-25" or "all".
    pub selector: String,
    /// Row/column order of the confusion matrix.
    pub classes: Vec<ClassTag>,
    pub class_names: BTreeMap<ClassTag, String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    /// NaN for classes with no test samples.
    pub tpr: Vec<f64>,
    pub fnr: Vec<f64>,
    pub selection_time_s: f64,
    pub train_time_s: f64,
    /// Whole test set.
    pub infer_time_s: f64,
    pub infer_per_sample_s: f64,
}

impl EvalReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.classes.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.confusion[i].iter().sum()
    }

    /// Attach fit timings measured by the caller.
    pub fn with_fit_times(mut self, selection_s: f64, train_s: f64) -> Self {
        self.selection_time_s = selection_s;
        self.train_time_s = train_s;
        self
    }

    /// Check row sums against `test`, tpr + fnr = 1 and accuracy = trace / total.
    pub fn check_invariants(&self, test: &Dataset) -> Result<()> {
        let n = self.classes.len();
        if self.confusion.len() != n || self.confusion.iter().any(|r| r.len() != n) {
            return Err(Error::validation("confusion matrix is not square over the class list"));
        }
        let counts = test.class_counts();
        for (i, c) in self.classes.iter().enumerate() {
            let expected = counts.get(c).copied().unwrap_or(0);
            if self.row_sum(i) != expected {
                return Err(Error::validation(format!(
                    "row {c} sums to {} but the test set has {expected}",
                    self.row_sum(i)
                )));
            }
            if expected > 0 && (self.tpr[i] + self.fnr[i] - 1.0).abs() > 1e-12 {
                return Err(Error::validation(format!("tpr + fnr != 1 for class {c}")));
            }
        }
        if self.total() != test.len() {
            return Err(Error::validation("confusion total differs from test size"));
        }
        let acc = self.correct() as f64 / self.total() as f64;
        if (acc - self.accuracy).abs() > 1e-12 {
            return Err(Error::validation("accuracy differs from trace / total"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "method      {}", self.method).unwrap();
        writeln!(out, "selector    {}", self.selector).unwrap();
        writeln!(
            out,
            "accuracy    {:.4} ({}/{})",
            self.accuracy,
            self.correct(),
            self.total()
        )
        .unwrap();
        writeln!(out, "selection_s {:.4}", self.selection_time_s).unwrap();
        writeln!(out, "train_s     {:.4}", self.train_time_s).unwrap();
        writeln!(out, "infer_s     {:.4}", self.infer_time_s).unwrap();
        writeln!(out, "infer_per_sample_s {:.4e}", self.infer_per_sample_s).unwrap();
        out.push_str("\nconfusion (rows = true, columns = predicted)\n");
        out.push_str("      ");
        for c in &self.classes {
            write!(out, "{c:>6}").unwrap();
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            write!(out, "{c:>6}").unwrap();
            for v in row {
                write!(out, "{v:>6}").unwrap();
            }
            out.push('\n');
        }
        out.push_str("\nclass  tpr     fnr     name\n");
        for (i, c) in self.classes.iter().enumerate() {
            let name = self.class_names.get(c).map(String::as_str).unwrap_or("");
            writeln!(out, "{c:<6} {:<7.4} {:<7.4} {name}", self.tpr[i], self.fnr[i]).unwrap();
        }
        out
    }

    /// Confusion block, blank line, then a metrics block.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in &self.classes {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            write!(out, "{c}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out.push('\n');
        out.push_str("metric,class,value\n");
        writeln!(out, "method,,{}", self.method).unwrap();
        writeln!(out, "selector,,{}", self.selector).unwrap();
        writeln!(out, "accuracy,,{:.6}", self.accuracy).unwrap();
        writeln!(out, "selection_time_s,,{:.4}", self.selection_time_s).unwrap();
        writeln!(out, "train_time_s,,{:.4}", self.train_time_s).unwrap();
        writeln!(out, "infer_time_s,,{:.4}", self.infer_time_s).unwrap();
        writeln!(out, "infer_per_sample_s,,{:.4e}", self.infer_per_sample_s).unwrap();
        for (i, c) in self.classes.iter().enumerate() {
            writeln!(out, "tpr,{c},{:.6}", self.tpr[i]).unwrap();
            writeln!(out, "fnr,{c},{:.6}", self.fnr[i]).unwrap();
        }
        out
    }
}

/// Confusion-derived metrics for a label/prediction pair over `classes`.
pub fn confusion_report(
    classes: &[ClassTag],
    truth: &[ClassTag],
    predicted: &[ClassTag],
) -> Result<(Vec<Vec<usize>>, f64, Vec<f64>, Vec<f64>)> {
    if truth.len() != predicted.len() {
        return Err(Error::Arity {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::validation("test set is empty"));
    }
    let pos: BTreeMap<ClassTag, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let n = classes.len();
    let mut confusion = vec![vec![0usize; n]; n];
    for (t, p) in truth.iter().zip(predicted) {
        let (Some(&i), Some(&j)) = (pos.get(t), pos.get(p)) else {
            return Err(Error::validation(format!("class {t} or {p} missing from class list")));
        };
        confusion[i][j] += 1;
    }
    let correct: usize = (0..n).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / truth.len() as f64;
    let tpr: Vec<f64> = (0..n)
        .map(|i| {
            let row: usize = confusion[i].iter().sum();
            if row == 0 {
                f64::NAN
            } else {
                confusion[i][i] as f64 / row as f64
            }
        })
        .collect();
    let fnr = tpr.iter().map(|t| 1.0 - t).collect();
    Ok((confusion, accuracy, tpr, fnr))
}

/// Predict every test sample and tabulate. Test classes the model never saw
/// get their own rows (all off-diagonal).
pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::validation("test set is empty"));
    }
    if test.arity() != model.arity {
        return Err(Error::Arity {
            expected: model.arity,
            got: test.arity(),
        });
    }
    let t0 = Instant::now();
    let predicted = model.predict_all(test)?;
    let infer_time_s = t0.elapsed().as_secs_f64();

    let mut class_names = model.class_names.clone();
    for (c, name) in test.class_names() {
        class_names.entry(*c).or_insert_with(|| name.clone());
    }
    for c in test.classes() {
        class_names.entry(c).or_default();
    }
    let classes: Vec<ClassTag> = class_names.keys().copied().collect();
    let (confusion, accuracy, tpr, fnr) = confusion_report(&classes, &test.labels(), &predicted)?;
    Ok(EvalReport {
        method: model.kind().to_string(),
        selector: model
            .selected_features
            .as_ref()
            .map_or_else(|| "all".to_string(), |r| format!("{}-{}", r.method, r.k())),
        classes,
        class_names,
        confusion,
        accuracy,
        tpr,
        fnr,
        selection_time_s: 0.0,
        train_time_s: 0.0,
        infer_time_s,
        infer_per_sample_s: infer_time_s / test.len() as f64,
    })
}
