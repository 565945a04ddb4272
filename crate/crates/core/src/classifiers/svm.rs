//! Gaussian-kernel SVM: one-vs-one binary machines trained by SMO with
//! maximal-violating-pair working-set selection.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use super::knn::sq_dist;
use crate::error::{Error, Result};
use crate::ClassTag;

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 10;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    /// `1 / (num_features * mean feature variance)` of the training matrix.
    Auto,
    Value(f64),
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

pub fn auto_gamma(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows() as f64;
    let d = x.ncols();
    let mean_var = x
        .columns()
        .into_iter()
        .map(|c| {
            let m = c.sum() / n;
            c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

/// Result of one binary dual solve.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ α_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Dual objective `Σ α - ½ Σ_ij α_i α_j y_i y_j K_ij` (to be maximized).
pub fn dual_objective(kernel: &Array2<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[[i, j]];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Solve `min ½ αᵀQα - eᵀα` s.t. `0 <= α <= c`, `yᵀα = 0`, with
/// `Q_ij = y_i y_j K_ij`, stopping once the maximal KKT violation gap is below `tol`.
pub fn smo_solve(
    kernel: &Array2<f64>,
    y: &[f64],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SmoSolution> {
    let n = y.len();
    if kernel.dim() != (n, n) {
        return Err(Error::validation("kernel shape does not match labels"));
    }
    if kernel.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("kernel matrix has non-finite entries".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::validation("C must be positive"));
    }
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[[i, j]];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free vectors, else the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    Ok(SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
    })
}

/// Binary machine voting `positive` when the decision value is >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub positive: ClassTag,
    pub negative: ClassTag,
    /// `α_i y_i` per support vector.
    pub coef: Vec<f64>,
    pub support: Vec<Vec<f64>>,
    pub rho: f64,
}

impl BinarySvm {
    pub fn decision(&self, q: &[f64], gamma: f64) -> f64 {
        self.coef
            .iter()
            .zip(&self.support)
            .map(|(a, s)| a * rbf(s, q, gamma))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub c: f64,
    pub gamma: f64,
    pub classes: Vec<ClassTag>,
    pub machines: Vec<BinarySvm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmFitParams {
    pub c: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmFitParams {
    fn default() -> Self {
        SvmFitParams {
            c: DEFAULT_C,
            gamma: Gamma::Auto,
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

/// Iteration cap for one binary problem of `n` points.
pub fn iteration_cap(max_passes: usize, n: usize) -> usize {
    max_passes.max(1) * 100 * n.max(1)
}

pub fn gram(rows: &[&[f64]], gamma: f64) -> Array2<f64> {
    let n = rows.len();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let v = rbf(rows[i], rows[j], gamma);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

impl SvmModel {
    pub fn fit(x: ArrayView2<f64>, y: &[ClassTag], params: &SvmFitParams) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::validation("label count differs from sample count"));
        }
        let mut classes = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::validation("SVM needs at least 2 classes"));
        }
        let gamma = match params.gamma {
            Gamma::Auto => auto_gamma(x),
            Gamma::Value(g) => g,
        };
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::Numeric(format!("gamma {gamma} is not positive and finite")));
        }
        let x = x.as_standard_layout();
        let rows: Vec<&[f64]> = x
            .rows()
            .into_iter()
            .map(|r| r.to_slice().expect("standard layout"))
            .collect();

        let pairs: Vec<(ClassTag, ClassTag)> = classes
            .iter()
            .enumerate()
            .flat_map(|(a, &ca)| classes[a + 1..].iter().map(move |&cb| (ca, cb)))
            .collect();
        let machines = pairs
            .par_iter()
            .map(|&(pos, neg)| {
                let members: Vec<usize> =
                    (0..y.len()).filter(|&i| y[i] == pos || y[i] == neg).collect();
                let sub: Vec<&[f64]> = members.iter().map(|&i| rows[i]).collect();
                let yy: Vec<f64> = members
                    .iter()
                    .map(|&i| if y[i] == pos { 1.0 } else { -1.0 })
                    .collect();
                let kernel = gram(&sub, gamma);
                let sol = smo_solve(
                    &kernel,
                    &yy,
                    params.c,
                    params.tol,
                    iteration_cap(params.max_passes, yy.len()),
                )?;
                let mut coef = Vec::new();
                let mut support = Vec::new();
                for (k, &a) in sol.alpha.iter().enumerate() {
                    if a > 0.0 {
                        coef.push(a * yy[k]);
                        support.push(sub[k].to_vec());
                    }
                }
                Ok(BinarySvm {
                    positive: pos,
                    negative: neg,
                    coef,
                    support,
                    rho: sol.rho,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SvmModel {
            c: params.c,
            gamma,
            classes,
            machines,
        })
    }

    /// Pairwise vote tally over all classes.
    pub fn votes(&self, q: &[f64]) -> Result<BTreeMap<ClassTag, usize>> {
        let mut votes: BTreeMap<ClassTag, usize> = self.classes.iter().map(|&c| (c, 0)).collect();
        for m in &self.machines {
            let v = m.decision(q, self.gamma);
            if !v.is_finite() {
                return Err(Error::Numeric("non-finite SVM decision value".into()));
            }
            let winner = if v >= 0.0 { m.positive } else { m.negative };
            *votes.get_mut(&winner).expect("machine classes are model classes") += 1;
        }
        Ok(votes)
    }

    /// Most votes wins; ties go to the lowest tag.
    pub fn predict(&self, q: &[f64]) -> Result<ClassTag> {
        let votes = self.votes(q)?;
        let mut best = (self.classes[0], 0usize);
        for (&c, &v) in &votes {
            if v > best.1 {
                best = (c, v);
            }
        }
        Ok(best.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separable_four_points() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]];
        let y = [0, 0, 1, 1];
        let m = SvmModel::fit(x.view(), &y, &SvmFitParams::default()).unwrap();
        for (i, row) in x.rows().into_iter().enumerate() {
            let q = row.as_slice().unwrap();
            assert_eq!(m.predict(q).unwrap(), y[i]);
            let margin = m.machines[0].decision(q, m.gamma) * if y[i] == 0 { 1.0 } else { -1.0 };
            assert!(margin >= 0.0);
        }
    }

    #[test]
    fn equality_constraint_holds() {
        let x = array![[0.0], [0.4], [0.5], [1.0], [0.45], [0.2]];
        let yy = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let rows: Vec<&[f64]> = x.rows().into_iter().map(|r| r.to_slice().unwrap()).collect();
        let k = gram(&rows, 2.0);
        let sol = smo_solve(&k, &yy, 1.0, 1e-3, 10_000).unwrap();
        assert!(sol.converged);
        let s: f64 = sol.alpha.iter().zip(&yy).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-9);
        assert!(sol.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
    }

    #[test]
    fn nine_classes_cast_36_votes() {
        let x = Array2::from_shape_fn((27, 2), |(i, j)| (i / 3) as f64 * 2.0 + j as f64 * 0.1 + (i % 3) as f64 * 0.05);
        let y: Vec<ClassTag> = (0..27).map(|i| (i / 3) as ClassTag).collect();
        let m = SvmModel::fit(x.view(), &y, &SvmFitParams::default()).unwrap();
        assert_eq!(m.machines.len(), 36);
        let v = m.votes(&[4.0, 0.05]).unwrap();
        assert_eq!(v.values().sum::<usize>(), 36);
    }

    #[test]
    fn non_finite_kernel_aborts() {
        let mut k = Array2::eye(2);
        k[[0, 1]] = f64::NAN;
        assert!(matches!(
            smo_solve(&k, &[1.0, -1.0], 1.0, 1e-3, 100),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[0.0], [1.0]];
        assert!(SvmModel::fit(x.view(), &[2, 2], &SvmFitParams::default()).is_err());
    }
}
