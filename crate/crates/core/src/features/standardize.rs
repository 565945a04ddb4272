use crate::error::{Error, Result};
use crate::protocol::Dataset;

/// Per-feature z-score parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    /// Population standard deviation; exactly 0 for constant features.
    pub stdev: Vec<f64>,
}

impl StandardizationStats {
    /// Stats that leave every value unchanged.
    pub fn identity(arity: usize) -> Self {
        StandardizationStats {
            mean: vec![0.0; arity],
            stdev: vec![1.0; arity],
        }
    }

    pub fn arity(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn transform_one(&self, feature: usize, value: f64) -> f64 {
        let sd = self.stdev[feature];
        if sd == 0.0 {
            0.0
        } else {
            (value - self.mean[feature]) / sd
        }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| self.transform_one(i, v))
            .collect()
    }

    /// Transform only the listed features of a full-arity vector.
    pub fn transform_selected(&self, x: &[f64], indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.transform_one(i, x[i])).collect()
    }
}

pub fn fit_standardizer(train: &Dataset) -> Result<StandardizationStats> {
    if train.is_empty() {
        return Err(Error::validation("cannot fit a standardizer on an empty dataset"));
    }
    let d = train.arity();
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for s in train.samples() {
        for (j, &v) in s.features.iter().enumerate() {
            mean[j] += v;
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for s in train.samples() {
        for (j, &v) in s.features.iter().enumerate() {
            var[j] += (v - mean[j]).powi(2);
        }
    }
    let stdev = (0..d)
        .map(|j| {
            if min[j] == max[j] {
                0.0
            } else {
                (var[j] / n).sqrt()
            }
        })
        .collect();
    Ok(StandardizationStats { mean, stdev })
}

pub fn apply_standardizer(stats: &StandardizationStats, ds: &Dataset) -> Result<Dataset> {
    if !ds.is_empty() && ds.arity() != stats.arity() {
        return Err(Error::Arity {
            expected: stats.arity(),
            got: ds.arity(),
        });
    }
    Ok(ds.map_features(|f| stats.transform(f)))
}
