//! Histogram mutual information between discretized variables (nats).

use crate::error::{Error, Result};
use crate::ClassTag;

pub const DEFAULT_BINS: usize = 16;

/// Equal-width bin index of every value over the column's own range.
/// A constant column maps entirely to bin 0.
pub fn discretize(values: &[f64], bins: usize) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = max - min;
    if !(width > 0.0) {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| (((v - min) / width * bins as f64) as usize).min(bins - 1))
        .collect()
}

/// Dense codes 0..k for arbitrary labels, in ascending label order.
pub fn encode_labels(labels: &[ClassTag]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<ClassTag> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let codes = labels
        .iter()
        .map(|l| distinct.binary_search(l).unwrap())
        .collect();
    (codes, distinct.len())
}

/// MI of two discrete code sequences with alphabets `ka` and `kb`.
pub fn mi_codes(a: &[usize], ka: usize, b: &[usize], kb: usize) -> f64 {
    let n = a.len();
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * kb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for x in 0..ka {
        for y in 0..kb {
            let nxy = joint[x * kb + y];
            if nxy > 0 {
                let pxy = nxy as f64 / nf;
                mi += pxy * ((nxy as f64 * nf) / (ca[x] as f64 * cb[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// MI between an equal-width-binned feature and class labels.
pub fn mutual_information(feature: &[f64], labels: &[ClassTag], bins: usize) -> Result<f64> {
    if feature.len() != labels.len() {
        return Err(Error::validation(format!(
            "feature has {} values but there are {} labels",
            feature.len(),
            labels.len()
        )));
    }
    if feature.len() < 2 {
        return Err(Error::validation("need at least 2 samples"));
    }
    if bins < 2 {
        return Err(Error::validation("bins must be >= 2"));
    }
    let binned = discretize(feature, bins);
    let (codes, k) = encode_labels(labels);
    Ok(mi_codes(&binned, bins, &codes, k))
}

/// MI between two features, each binned over its own range.
pub fn feature_mutual_information(a: &[f64], b: &[f64], bins: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation("feature length mismatch"));
    }
    if bins < 2 {
        return Err(Error::validation("bins must be >= 2"));
    }
    Ok(mi_codes(&discretize(a, bins), bins, &discretize(b, bins), bins))
}

/// Shannon entropy (nats) of a code sequence.
pub fn entropy_codes(codes: &[usize], k: usize) -> f64 {
    let mut counts = vec![0usize; k];
    for &c in codes {
        counts[c] += 1;
    }
    let n = codes.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}
