//! Stratified k-fold cross-validation with per-fold refitting.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::model::{fit_pipeline, PipelineConfig};
use crate::error::{Error, Result};
use crate::protocol::Dataset;
use crate::seed::{self, stream};

pub const DEFAULT_FOLDS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub fold_sizes: Vec<usize>,
    /// Pooled accuracy: correct predictions over all held-out samples.
    pub pooled_accuracy: f64,
}

impl CvResult {
    pub fn folds(&self) -> usize {
        self.fold_accuracies.len()
    }

    /// Unweighted mean of the per-fold accuracies.
    pub fn mean_accuracy(&self) -> f64 {
        self.fold_accuracies.iter().sum::<f64>() / self.folds() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,n,accuracy\n");
        for (i, (a, n)) in self.fold_accuracies.iter().zip(&self.fold_sizes).enumerate() {
            out.push_str(&format!("{i},{n},{a:.6}\n"));
        }
        out.push_str(&format!("mean,,{:.6}\n", self.mean_accuracy()));
        out.push_str(&format!("pooled,,{:.6}\n", self.pooled_accuracy));
        out
    }
}

/// Fold index per sample. Each class is shuffled and dealt round-robin, with
/// the starting fold carried across classes so totals stay balanced.
/// `folds == len` is leave-one-out and skips the per-class count check.
pub fn fold_assignment(ds: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    let n = ds.len();
    if folds < 2 {
        return Err(Error::validation("folds must be at least 2"));
    }
    if folds > n {
        return Err(Error::validation(format!("{folds} folds for {n} samples")));
    }
    if folds == n {
        return Ok((0..n).collect());
    }
    let labels = ds.labels();
    let mut out = vec![0usize; n];
    let mut next = 0usize;
    for (c, count) in ds.class_counts() {
        if count < folds {
            return Err(Error::validation(format!(
                "class {c} has {count} samples, fewer than {folds} folds"
            )));
        }
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut seed::rng(seed, &[stream::FOLDS, c as u64]));
        for i in members {
            out[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(out)
}

/// Each fold is held out once; the standardizer, selector and classifier are
/// refit on the remaining folds.
pub fn cross_validate(config: &PipelineConfig, ds: &Dataset, folds: usize, seed: u64) -> Result<CvResult> {
    let assign = fold_assignment(ds, folds, seed)?;
    let per_fold: Vec<Result<(usize, usize)>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assign[i] == f);
            let (model, _) = fit_pipeline(&ds.subset(&train_idx), config)?;
            let correct = test_idx
                .iter()
                .map(|&i| model.predict_sample(&ds.samples()[i]).map(|p| p == ds.samples()[i].label))
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&ok| ok)
                .count();
            Ok((correct, test_idx.len()))
        })
        .collect();
    let per_fold = per_fold.into_iter().collect::<Result<Vec<_>>>()?;
    let total_correct: usize = per_fold.iter().map(|p| p.0).sum();
    Ok(CvResult {
        fold_accuracies: per_fold.iter().map(|&(c, n)| c as f64 / n as f64).collect(),
        fold_sizes: per_fold.iter().map(|p| p.1).collect(),
        pooled_accuracy: total_correct as f64 / ds.len() as f64,
    })
}
