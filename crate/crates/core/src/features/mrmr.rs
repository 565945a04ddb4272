//! Greedy minimum-redundancy maximum-relevance selection, difference form:
//! each step picks the feature maximizing `MI(f; label) - mean_s MI(f; s)`.

use super::mi::{discretize, encode_labels, mi_codes, DEFAULT_BINS};
use super::ranking::{FeatureRanking, SelectionMethod};
use crate::error::{Error, Result};
use crate::protocol::Dataset;

pub const DEFAULT_K: usize = 25;

pub fn mrmr_select(train: &Dataset, k: usize, bins: usize) -> Result<FeatureRanking> {
    let d = train.arity();
    if k == 0 || k > d {
        return Err(Error::validation(format!("k must lie in 1..={d}, got {k}")));
    }
    if bins < 2 {
        return Err(Error::validation("bins must be >= 2"));
    }
    if train.len() < 2 {
        return Err(Error::validation("need at least 2 samples"));
    }
    let binned: Vec<Vec<usize>> = (0..d).map(|j| discretize(&train.column(j), bins)).collect();
    let (labels, n_classes) = encode_labels(&train.labels());
    let relevance: Vec<f64> = binned
        .iter()
        .map(|b| mi_codes(b, bins, &labels, n_classes))
        .collect();

    let mut chosen = vec![false; d];
    let mut redundancy = vec![0.0; d];
    let mut indices = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    for step in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|&j| !chosen[j]) {
            let score = if step == 0 {
                relevance[j]
            } else {
                relevance[j] - redundancy[j] / step as f64
            };
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((j, score));
            }
        }
        let (j, score) = best.expect("k <= d leaves a candidate");
        chosen[j] = true;
        indices.push(j);
        scores.push(score);
        for f in (0..d).filter(|&f| !chosen[f]) {
            redundancy[f] += mi_codes(&binned[f], bins, &binned[j], bins);
        }
    }
    FeatureRanking::new(SelectionMethod::Mrmr, indices, scores)
}

pub fn mrmr_select_default(train: &Dataset) -> Result<FeatureRanking> {
    mrmr_select(train, DEFAULT_K.min(train.arity()), DEFAULT_BINS)
}
