//! Diagonal neighbourhood components analysis for feature ranking.
//!
//! Learns one weight per feature by gradient ascent on the regularized
//! leave-one-out soft-neighbour objective
//!
//! ```text
//! F(w) = (1/n) Σ_i Σ_{j: y_j = y_i} p_ij  -  λ Σ_m w_m²
//! p_ij = exp(-d_ij) / Σ_{k≠i} exp(-d_ik),   d_ij = Σ_m w_m² (x_im - x_jm)²
//! ```
//!
//! and ranks features by `|w_m|`.

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;

use super::ranking::{FeatureRanking, SelectionMethod};
use crate::error::{Error, Result};
use crate::features::mi::encode_labels;
use crate::protocol::Dataset;
use crate::seed::{self, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct NcaParams {
    pub k: usize,
    pub iters: usize,
    pub learning_rate: f64,
    /// Weight penalty; `None` uses `1 / n`.
    pub lambda: Option<f64>,
    /// Optional cap on training points, drawn with the given seed.
    pub subsample: Option<(usize, u64)>,
}

impl Default for NcaParams {
    fn default() -> Self {
        NcaParams {
            k: 25,
            iters: 200,
            learning_rate: 0.01,
            lambda: None,
            subsample: None,
        }
    }
}

/// Objective/gradient evaluator over a fixed (standardized) training matrix.
pub struct NcaProblem {
    x: Array2<f64>,
    same: Array2<f64>,
    lambda: f64,
}

#[derive(Debug, Clone)]
pub struct NcaFit {
    pub weights: Vec<f64>,
    /// Objective before each update, plus the final value.
    pub objective_trace: Vec<f64>,
}

impl NcaProblem {
    pub fn new(x: Array2<f64>, labels: &[u32], lambda: Option<f64>) -> Result<Self> {
        let n = x.nrows();
        if labels.len() != n {
            return Err(Error::validation("label count differs from sample count"));
        }
        let (codes, k) = encode_labels(labels);
        if k < 2 {
            return Err(Error::validation("NCA needs at least 2 classes"));
        }
        let same = Array2::from_shape_fn((n, n), |(i, j)| {
            if i != j && codes[i] == codes[j] {
                1.0
            } else {
                0.0
            }
        });
        Ok(NcaProblem {
            x,
            same,
            lambda: lambda.unwrap_or(1.0 / n as f64),
        })
    }

    pub fn from_dataset(train: &Dataset, lambda: Option<f64>) -> Result<Self> {
        Self::new(train.matrix(), &train.labels(), lambda)
    }

    pub fn arity(&self) -> usize {
        self.x.ncols()
    }

    /// Softmax neighbour matrix (zero diagonal) and per-row same-class mass.
    fn neighbour_probs(&self, w: &[f64]) -> (Array2<f64>, Array1<f64>) {
        let n = self.x.nrows();
        let wsq = Array1::from_iter(w.iter().map(|v| v * v));
        let z = &self.x * &wsq.mapv(f64::sqrt);
        let gram = z.dot(&z.t());
        let sq = gram.diag().to_owned();
        let mut p = Array2::zeros((n, n));
        for i in 0..n {
            let mut row = p.row_mut(i);
            let mut dmin = f64::INFINITY;
            for j in 0..n {
                if j != i {
                    let d = (sq[i] + sq[j] - 2.0 * gram[[i, j]]).max(0.0);
                    row[j] = d;
                    dmin = dmin.min(d);
                }
            }
            let mut total = 0.0;
            for j in 0..n {
                if j == i {
                    row[j] = 0.0;
                } else {
                    let e = (dmin - row[j]).exp();
                    row[j] = e;
                    total += e;
                }
            }
            row.mapv_inplace(|e| e / total);
        }
        let same_mass = (&p * &self.same).sum_axis(Axis(1));
        (p, same_mass)
    }

    pub fn objective(&self, w: &[f64]) -> f64 {
        let (_, same_mass) = self.neighbour_probs(w);
        let n = self.x.nrows() as f64;
        same_mass.sum() / n - self.lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn objective_and_gradient(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let n = self.x.nrows() as f64;
        let (p, same_mass) = self.neighbour_probs(w);
        let objective =
            same_mass.sum() / n - self.lambda * w.iter().map(|v| v * v).sum::<f64>();

        // A_ij = p_i P_ij - [y_i = y_j] P_ij. Rows of A sum to zero, so
        // Σ_ij A_ij (x_im - x_jm)² = Σ_j colsum(A)_j x_jm² - 2 Σ_i x_im (A X)_im.
        let a = &p * &same_mass.view().insert_axis(Axis(1)) - &(&p * &self.same);
        let col = a.sum_axis(Axis(0));
        let ax = a.dot(&self.x);
        let xsq = self.x.mapv(|v| v * v);
        let term1 = xsq.t().dot(&col);
        let term2 = (&self.x * &ax).sum_axis(Axis(0));
        let grad = w
            .iter()
            .enumerate()
            .map(|(m, &wm)| 2.0 * wm / n * (term1[m] - 2.0 * term2[m]) - 2.0 * self.lambda * wm)
            .collect();
        (objective, grad)
    }

    /// Fixed-step gradient ascent from unit weights.
    pub fn fit(&self, iters: usize, learning_rate: f64) -> Result<NcaFit> {
        let mut w = vec![1.0; self.arity()];
        let mut trace = Vec::with_capacity(iters + 1);
        for it in 0..iters {
            let (f, g) = self.objective_and_gradient(&w);
            if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "NCA objective or gradient became non-finite at iteration {it}"
                )));
            }
            trace.push(f);
            for (wm, gm) in w.iter_mut().zip(&g) {
                *wm += learning_rate * gm;
            }
        }
        let f = self.objective(&w);
        if !f.is_finite() {
            return Err(Error::Numeric("NCA objective became non-finite".into()));
        }
        trace.push(f);
        Ok(NcaFit {
            weights: w,
            objective_trace: trace,
        })
    }
}

/// Indices sorted by descending `|weight|`, ties to the lower index.
pub fn rank_by_weight(weights: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| weights[b].abs().total_cmp(&weights[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Rank features of a standardized training set by learned NCA weight.
pub fn nca_select(train: &Dataset, params: &NcaParams) -> Result<FeatureRanking> {
    let d = train.arity();
    if params.k == 0 || params.k > d {
        return Err(Error::validation(format!("k must lie in 1..={d}, got {}", params.k)));
    }
    let data = match params.subsample {
        Some((cap, seed)) if train.len() > cap => {
            let mut rng = seed::rng(seed, &[stream::NCA_SUBSAMPLE]);
            let mut picked = index::sample(&mut rng, train.len(), cap).into_vec();
            picked.sort_unstable();
            train.subset(&picked)
        }
        _ => train.clone(),
    };
    let problem = NcaProblem::from_dataset(&data, params.lambda)?;
    let fit = problem.fit(params.iters, params.learning_rate)?;
    let indices = rank_by_weight(&fit.weights, params.k);
    let scores = indices.iter().map(|&i| fit.weights[i].abs()).collect();
    FeatureRanking::new(SelectionMethod::Nca, indices, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Dataset {
        // feature 0 separates the classes, feature 1 is label-independent jitter
        let rows = (0..24).map(|i| {
            let y = (i % 2) as u32;
            let f0 = if y == 0 { -1.0 } else { 1.0 } + 0.05 * ((i * 5 % 7) as f64 - 3.0);
            let f1 = ((i * 11 % 13) as f64 - 6.0) / 4.0;
            (vec![f0, f1], y)
        });
        Dataset::from_rows(rows).unwrap()
    }

    #[test]
    fn separating_feature_ranks_first() {
        let r = nca_select(
            &separable(),
            &NcaParams {
                k: 2,
                ..NcaParams::default()
            },
        )
        .unwrap();
        assert_eq!(r.indices[0], 0);
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::from_rows((0..5).map(|i| (vec![i as f64], 0))).unwrap();
        assert!(nca_select(
            &ds,
            &NcaParams {
                k: 1,
                ..NcaParams::default()
            }
        )
        .is_err());
    }

    #[test]
    fn tie_breaks_to_lower_index() {
        assert_eq!(rank_by_weight(&[1.0, -2.0, 2.0, 0.5], 3), vec![1, 2, 0]);
    }

    #[test]
    fn diverging_step_is_reported() {
        let err = NcaProblem::from_dataset(&separable(), None)
            .unwrap()
            .fit(50, 1e300)
            .unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }
}
