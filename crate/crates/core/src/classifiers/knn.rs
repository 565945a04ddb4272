use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::ClassTag;

pub const DEFAULT_K: usize = 5;

/// Stored training points for Euclidean k-nearest-neighbour voting.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub x: Array2<f64>,
    pub y: Vec<ClassTag>,
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl KnnModel {
    pub fn fit(x: ArrayView2<f64>, y: &[ClassTag], k: usize) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::validation("label count differs from sample count"));
        }
        if k == 0 {
            return Err(Error::validation("k must be >= 1"));
        }
        if k > y.len() {
            return Err(Error::validation(format!(
                "k = {k} exceeds the {} training samples",
                y.len()
            )));
        }
        Ok(KnnModel {
            k,
            x: x.as_standard_layout().into_owned(),
            y: y.to_vec(),
        })
    }

    /// The k nearest training rows as (squared distance, row index), ordered
    /// by distance then index.
    pub fn neighbours(&self, q: &[f64]) -> Vec<(f64, usize)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (i, row) in self.x.rows().into_iter().enumerate() {
            let d = sq_dist(row.as_slice().expect("standard layout"), q);
            if best.len() == self.k && d >= best[self.k - 1].0 {
                continue;
            }
            // later rows lose distance ties, so insert after equal distances
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, i));
            best.truncate(self.k);
        }
        best
    }

    /// Vote counts per class among the k nearest neighbours.
    pub fn votes(&self, q: &[f64]) -> BTreeMap<ClassTag, usize> {
        let mut votes = BTreeMap::new();
        for (_, i) in self.neighbours(q) {
            *votes.entry(self.y[i]).or_insert(0) += 1;
        }
        votes
    }

    /// Majority vote; ties go to the class with the nearest member, then the lowest tag.
    pub fn predict(&self, q: &[f64]) -> ClassTag {
        vote(self.neighbours(q).iter().map(|&(d, i)| (d, self.y[i])))
    }
}

/// Resolve a vote over (distance, label) pairs.
pub fn vote(neigh: impl Iterator<Item = (f64, ClassTag)>) -> ClassTag {
    let mut tally: BTreeMap<ClassTag, (usize, f64)> = BTreeMap::new();
    for (d, label) in neigh {
        let e = tally.entry(label).or_insert((0, f64::INFINITY));
        e.0 += 1;
        e.1 = e.1.min(d);
    }
    let mut best: Option<(ClassTag, usize, f64)> = None;
    for (&tag, &(count, nearest)) in &tally {
        let better = match best {
            None => true,
            Some((_, bc, bn)) => count > bc || (count == bc && nearest < bn),
        };
        if better {
            best = Some((tag, count, nearest));
        }
    }
    best.expect("at least one neighbour").0
}
