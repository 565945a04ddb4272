//! CART classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values of
//! a feature. The best split maximizes impurity decrease; ties go to the
//! lowest feature index, then the lowest threshold.

use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::ClassTag;

pub const DEFAULT_MAX_DEPTH: usize = 20;
pub const DEFAULT_MIN_LEAF: usize = 1;

/// Scores closer than this are treated as tied.
pub const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// `(feature, threshold, left, right)`; samples with `x[feature] <= threshold` go left.
    pub split: Option<(usize, f64, usize, usize)>,
    /// Training-sample count per class, aligned with `TreeModel::classes`.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub classes: Vec<ClassTag>,
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted child Gini impurity.
    pub score: f64,
}

pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let sq: usize = counts.iter().map(|c| c * c).sum();
    1.0 - sq as f64 / (n * n) as f64
}

/// Best (feature, midpoint) split of the rows in `idx`, or `None` if no
/// split leaves `min_leaf` samples on both sides.
pub fn best_split(
    x: ArrayView2<f64>,
    codes: &[usize],
    n_classes: usize,
    idx: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = idx.len();
    let mut total = vec![0usize; n_classes];
    for &i in idx {
        total[codes[i]] += 1;
    }
    let total_sq: usize = total.iter().map(|c| c * c).sum();
    let mut order = idx.to_vec();
    let mut best: Option<Split> = None;
    for f in 0..x.ncols() {
        order.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
        let mut left = vec![0usize; n_classes];
        let mut right = total.clone();
        let (mut sq_l, mut sq_r) = (0usize, total_sq);
        for pos in 0..n - 1 {
            let c = codes[order[pos]];
            sq_l += 2 * left[c] + 1;
            left[c] += 1;
            sq_r -= 2 * right[c] - 1;
            right[c] -= 1;
            let (v, next) = (x[[order[pos], f]], x[[order[pos + 1], f]]);
            let n_l = pos + 1;
            let n_r = n - n_l;
            if v == next || n_l < min_leaf || n_r < min_leaf {
                continue;
            }
            let weighted = (n_l as f64 - sq_l as f64 / n_l as f64)
                + (n_r as f64 - sq_r as f64 / n_r as f64);
            let score = weighted / n as f64;
            if best.is_none_or(|b| score < b.score - SCORE_EPS) {
                best = Some(Split {
                    feature: f,
                    threshold: (v + next) / 2.0,
                    score,
                });
            }
        }
    }
    best
}

impl TreeModel {
    pub fn fit(
        x: ArrayView2<f64>,
        y: &[ClassTag],
        max_depth: usize,
        min_leaf: usize,
    ) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::validation("cannot grow a tree on an empty dataset"));
        }
        if x.nrows() != y.len() {
            return Err(Error::validation("label count differs from sample count"));
        }
        let min_leaf = min_leaf.max(1);
        let (codes, n_classes) = crate::features::mi::encode_labels(y);
        let mut classes = y.to_vec();
        classes.sort_unstable();
        classes.dedup();

        let mut nodes: Vec<TreeNode> = Vec::new();
        // (node slot, member rows, depth)
        let mut stack = vec![(0usize, (0..y.len()).collect::<Vec<_>>(), 0usize)];
        nodes.push(TreeNode {
            split: None,
            counts: vec![],
        });
        while let Some((slot, idx, depth)) = stack.pop() {
            let mut counts = vec![0usize; n_classes];
            for &i in &idx {
                counts[codes[i]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || depth >= max_depth || idx.len() < 2 * min_leaf {
                None
            } else {
                best_split(x, &codes, n_classes, &idx, min_leaf)
            };
            nodes[slot].counts = counts;
            if let Some(s) = split {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| x[[i, s.feature]] <= s.threshold);
                let (li, ri) = (nodes.len(), nodes.len() + 1);
                for _ in 0..2 {
                    nodes.push(TreeNode {
                        split: None,
                        counts: vec![],
                    });
                }
                nodes[slot].split = Some((s.feature, s.threshold, li, ri));
                stack.push((ri, r, depth + 1));
                stack.push((li, l, depth + 1));
            }
        }
        Ok(TreeModel { classes, nodes })
    }

    pub fn leaf(&self, q: &[f64]) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let Some((f, t, l, r)) = node.split {
            node = &self.nodes[if q[f] <= t { l } else { r }];
        }
        node
    }

    /// Majority class of the leaf reached by `q`; ties to the lowest tag.
    pub fn predict(&self, q: &[f64]) -> ClassTag {
        let counts = &self.leaf(q).counts;
        let best = (0..counts.len()).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
        self.classes[best]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i].split {
                Some((_, _, l, r)) => 1 + walk(nodes, l).max(walk(nodes, r)),
                None => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    /// Checks child links and feature indices against `arity`.
    pub fn validate(&self, arity: usize) -> Result<()> {
        for n in &self.nodes {
            if n.counts.len() != self.classes.len() {
                return Err(Error::validation("tree node class counts misaligned"));
            }
            if let Some((f, t, l, r)) = n.split {
                if f >= arity || l >= self.nodes.len() || r >= self.nodes.len() || !t.is_finite() {
                    return Err(Error::validation("tree node references invalid feature or child"));
                }
            }
        }
        Ok(())
    }
}
