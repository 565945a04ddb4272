//! Independent reference implementations shared by the oracle, property and
//! acceptance tests. Each check returns the first disagreement it finds.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use nvmprobe::classifiers::knn::KnnModel;
use nvmprobe::classifiers::svm::{dual_objective, rbf, smo_solve};
use nvmprobe::classifiers::tree::best_split;
use nvmprobe::features::mi::encode_labels;
use nvmprobe::features::{mrmr_select, mutual_information, NcaProblem};
use nvmprobe::protocol::Dataset;
use nvmprobe::ClassTag;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = std::result::Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random labelled points; coordinates drawn from a small integer grid when
/// `grid` so that distance and threshold ties actually occur.
pub fn toy(rng: &mut ChaCha8Rng, n: usize, d: usize, classes: u32, grid: bool) -> (Array2<f64>, Vec<ClassTag>) {
    let x = Array2::from_shape_fn((n, d), |_| {
        if grid {
            rng.random_range(0..5) as f64
        } else {
            rng.random_range(-3.0..3.0)
        }
    });
    let y = (0..n).map(|_| rng.random_range(0..classes)).collect();
    (x, y)
}

pub fn toy_dataset(x: &Array2<f64>, y: &[ClassTag]) -> Dataset {
    Dataset::from_rows(x.rows().into_iter().map(|r| r.to_vec()).zip(y.iter().copied())).unwrap()
}

// ---------------------------------------------------------------- KNN

/// Full sort of all training points by (distance, index), then the vote rule
/// written out longhand.
pub fn knn_oracle(x: &Array2<f64>, y: &[ClassTag], q: &[f64], k: usize) -> ClassTag {
    let mut all: Vec<(f64, usize)> = x
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let top = &all[..k];
    let mut count: BTreeMap<ClassTag, usize> = BTreeMap::new();
    for &(_, i) in top {
        *count.entry(y[i]).or_default() += 1;
    }
    let max = *count.values().max().unwrap();
    let tied: Vec<ClassTag> = count.iter().filter(|(_, &c)| c == max).map(|(&t, _)| t).collect();
    // nearest member among tied classes; `top` is already distance-ordered,
    // equal distances then resolve to the lowest tag
    let best_d = top.iter().filter(|(_, i)| tied.contains(&y[*i])).map(|p| p.0).next().unwrap();
    *tied
        .iter()
        .filter(|t| top.iter().any(|&(d, i)| y[i] == **t && d == best_d))
        .min()
        .unwrap()
}

pub fn check_knn_instance(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(2..=30);
    let d = r.random_range(1..=5);
    let (x, y) = toy(&mut r, n, d, 3, seed % 2 == 0);
    let k = r.random_range(1..=n.min(7));
    let m = KnnModel::fit(x.view(), &y, k).map_err(|e| e.to_string())?;
    for _ in 0..100 {
        let q: Vec<f64> = (0..d)
            .map(|_| if seed % 2 == 0 { r.random_range(0..5) as f64 } else { r.random_range(-3.0..3.0) })
            .collect();
        let (got, want) = (m.predict(&q), knn_oracle(&x, &y, &q, k));
        if got != want {
            return Err(format!("knn seed {seed}: query {q:?} k={k} got {got} want {want}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- tree

fn gini_of(labels: &[ClassTag]) -> f64 {
    let mut c: HashMap<ClassTag, usize> = HashMap::new();
    for l in labels {
        *c.entry(*l).or_default() += 1;
    }
    let n = labels.len() as f64;
    1.0 - c.values().map(|&v| (v as f64 / n).powi(2)).sum::<f64>()
}

/// Every (feature, midpoint) candidate scored from scratch; lowest weighted
/// Gini wins, ties resolved by enumeration order (feature, then threshold).
pub fn gini_split_oracle(x: &Array2<f64>, y: &[ClassTag], min_leaf: usize) -> Option<(usize, f64, f64)> {
    let n = y.len();
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(f).to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<ClassTag> = (0..n).filter(|&i| x[[i, f]] <= t).map(|i| y[i]).collect();
            let right: Vec<ClassTag> = (0..n).filter(|&i| x[[i, f]] > t).map(|i| y[i]).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let score = (left.len() as f64 * gini_of(&left) + right.len() as f64 * gini_of(&right)) / n as f64;
            if best.is_none_or(|b| score < b.2 - 1e-12) {
                best = Some((f, t, score));
            }
        }
    }
    best
}

pub fn check_tree_instance(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(2..=30);
    let d = r.random_range(1..=5);
    let (x, y) = toy(&mut r, n, d, 3, seed % 3 != 0);
    let min_leaf = if seed % 4 == 0 { 2 } else { 1 };
    let (codes, k) = encode_labels(&y);
    let idx: Vec<usize> = (0..n).collect();
    let got = best_split(x.view(), &codes, k, &idx, min_leaf).map(|s| (s.feature, s.threshold, s.score));
    let want = gini_split_oracle(&x, &y, min_leaf);
    match (got, want) {
        (None, None) => Ok(()),
        (Some(g), Some(w)) if g.0 == w.0 && g.1 == w.1 && (g.2 - w.2).abs() < 1e-12 => Ok(()),
        _ => Err(format!("tree seed {seed}: got {got:?} want {want:?}")),
    }
}

// ---------------------------------------------------------------- SVM

pub struct SvmCase {
    pub kernel: Array2<f64>,
    pub y: Vec<f64>,
    pub c: f64,
}

pub fn svm_case(seed: u64, n: usize) -> SvmCase {
    let mut r = rng(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
    // both labels present
    let mut y: Vec<f64> = (0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    y[0] = 1.0;
    y[1] = -1.0;
    let gamma = r.random_range(0.2..2.0);
    let kernel = Array2::from_shape_fn((n, n), |(i, j)| rbf(&pts[i], &pts[j], gamma));
    SvmCase {
        kernel,
        y,
        c: [0.5, 1.0, 4.0][seed as usize % 3],
    }
}

/// Maximum of the dual over the feasible polytope by a shrinking grid. One
/// coordinate is eliminated through `Σ α y = 0`; every choice of eliminated
/// coordinate is tried and the best value kept.
pub fn svm_grid_optimum(case: &SvmCase) -> f64 {
    (0..case.y.len())
        .map(|e| svm_grid_eliminating(case, e))
        .fold(0.0, f64::max)
}

fn svm_grid_eliminating(case: &SvmCase, elim: usize) -> f64 {
    let n = case.y.len();
    let free: Vec<usize> = (0..n).filter(|&i| i != elim).collect();
    let steps = 4usize;
    let mut lo = vec![0.0; free.len()];
    let mut hi = vec![case.c; free.len()];
    let mut best_val = 0.0; // α = 0 is feasible
    let mut best = vec![0.0; free.len()];
    let mut alpha = vec![0.0; n];
    for _round in 0..40 {
        let total = (steps + 1).pow(free.len() as u32);
        for code in 0..total {
            let mut rem = code;
            let mut partial = 0.0;
            for (d, &i) in free.iter().enumerate() {
                let s = rem % (steps + 1);
                rem /= steps + 1;
                alpha[i] = lo[d] + (hi[d] - lo[d]) * s as f64 / steps as f64;
                partial += alpha[i] * case.y[i];
            }
            let last = -partial * case.y[elim];
            if !(-1e-12..=case.c + 1e-12).contains(&last) {
                continue;
            }
            alpha[elim] = last.clamp(0.0, case.c);
            let v = dual_objective(&case.kernel, &case.y, &alpha);
            if v > best_val {
                best_val = v;
                for (d, &i) in free.iter().enumerate() {
                    best[d] = alpha[i];
                }
            }
        }
        for d in 0..free.len() {
            let half = (hi[d] - lo[d]) * 0.35;
            lo[d] = (best[d] - half).max(0.0);
            hi[d] = (best[d] + half).min(case.c);
        }
    }
    best_val
}

/// Equality constraint, box, and maximal-violating-pair gap of a dual solution.
pub fn svm_kkt_audit(case: &SvmCase, alpha: &[f64], tol: f64) -> Check {
    let n = case.y.len();
    let eq: f64 = alpha.iter().zip(&case.y).map(|(a, y)| a * y).sum();
    if eq.abs() > 1e-9 {
        return Err(format!("sum alpha*y = {eq:e}"));
    }
    if alpha.iter().any(|&a| a < 0.0 || a > case.c) {
        return Err(format!("alpha outside [0, C]: {alpha:?}"));
    }
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| case.y[i] * case.y[j] * case.kernel[[i, j]] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..n {
        let v = -case.y[t] * grad[t];
        let (yt, a) = (case.y[t], alpha[t]);
        if (yt > 0.0 && a < case.c) || (yt < 0.0 && a > 0.0) {
            up = up.max(v);
        }
        if (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < case.c) {
            low = low.min(v);
        }
    }
    if up - low > tol {
        return Err(format!("KKT gap {} exceeds {tol}", up - low));
    }
    Ok(())
}

pub fn check_svm_instance(seed: u64) -> Check {
    let case = svm_case(seed, 6);
    let tol = 1e-3;
    let sol = smo_solve(&case.kernel, &case.y, case.c, tol, 100_000).map_err(|e| e.to_string())?;
    if !sol.converged {
        return Err(format!("svm seed {seed}: SMO did not converge"));
    }
    svm_kkt_audit(&case, &sol.alpha, tol).map_err(|e| format!("svm seed {seed}: {e}"))?;
    let got = dual_objective(&case.kernel, &case.y, &sol.alpha);
    let want = svm_grid_optimum(&case);
    if (got - want).abs() > 1e-3 {
        return Err(format!("svm seed {seed}: dual {got} vs grid {want}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- MI / MRMR

/// Bin codes by direct formula, then `H(X) + H(Y) - H(X, Y)` from hash-map counts.
pub fn mi_oracle(feature: &[f64], labels: &[ClassTag], bins: usize) -> f64 {
    let lo = feature.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = feature.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let code = |v: f64| -> usize {
        if hi == lo {
            0
        } else {
            let b = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
            b.min(bins - 1)
        }
    };
    let n = feature.len() as f64;
    let entropy = |counts: &HashMap<String, usize>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let mut hx = HashMap::new();
    let mut hy = HashMap::new();
    let mut hxy = HashMap::new();
    for (&v, &l) in feature.iter().zip(labels) {
        let b = code(v);
        *hx.entry(format!("{b}")).or_default() += 1;
        *hy.entry(format!("{l}")).or_default() += 1;
        *hxy.entry(format!("{b}/{l}")).or_default() += 1;
    }
    (entropy(&hx) + entropy(&hy) - entropy(&hxy)).max(0.0)
}

pub fn check_mi_instance(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(5..200);
    let classes = r.random_range(2..6);
    let bins = r.random_range(2..20);
    let labels: Vec<ClassTag> = (0..n).map(|_| r.random_range(0..classes)).collect();
    let feature: Vec<f64> = labels
        .iter()
        .map(|&l| if seed % 5 == 0 { 1.0 } else { l as f64 * r.random_range(0.0..1.0) + r.random_range(-1.0..1.0) })
        .collect();
    let got = mutual_information(&feature, &labels, bins).map_err(|e| e.to_string())?;
    let want = mi_oracle(&feature, &labels, bins);
    if (got - want).abs() > 1e-12 {
        return Err(format!("mi seed {seed}: {got} vs {want}"));
    }
    Ok(())
}

/// Greedy difference-form MRMR recomputed from oracle MI between binned columns.
pub fn mrmr_oracle(ds: &Dataset, k: usize, bins: usize) -> Vec<usize> {
    let d = ds.arity();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| ds.column(j)).collect();
    let labels = ds.labels();
    let binned_as_labels = |j: usize| -> Vec<ClassTag> {
        let c = &cols[j];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        c.iter()
            .map(|&v| if hi == lo { 0 } else { (((v - lo) / (hi - lo) * bins as f64).floor() as u32).min(bins as u32 - 1) })
            .collect()
    };
    let rel: Vec<f64> = (0..d).map(|j| mi_oracle(&cols[j], &labels, bins)).collect();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|j| !chosen.contains(j)) {
            let red = if chosen.is_empty() {
                0.0
            } else {
                chosen.iter().map(|&s| mi_oracle(&cols[j], &binned_as_labels(s), bins)).sum::<f64>() / chosen.len() as f64
            };
            let score = rel[j] - red;
            if best.is_none_or(|b| score > b.1 + 1e-12) {
                best = Some((j, score));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

pub fn mrmr_toy(seed: u64) -> Dataset {
    let mut r = rng(seed);
    let n = r.random_range(20..60);
    let d = r.random_range(3..9);
    let rows: Vec<(Vec<f64>, ClassTag)> = (0..n)
        .map(|_| {
            let l = r.random_range(0..3u32);
            let base = l as f64 + r.random_range(-0.8..0.8);
            let f = (0..d)
                .map(|j| match j % 3 {
                    0 => base + r.random_range(-0.3..0.3) * j as f64,
                    1 => r.random_range(-1.0..1.0),
                    _ => base * 0.5 + r.random_range(-1.0..1.0),
                })
                .collect();
            (f, l)
        })
        .collect();
    Dataset::from_rows(rows).unwrap()
}

/// Prefix consistency for every k plus agreement with the greedy oracle.
pub fn check_mrmr_instance(seed: u64) -> Check {
    let ds = mrmr_toy(seed);
    let d = ds.arity();
    let bins = 8;
    let full = mrmr_select(&ds, d, bins).map_err(|e| e.to_string())?;
    for k in 1..=d {
        let part = mrmr_select(&ds, k, bins).map_err(|e| e.to_string())?;
        if part.indices[..] != full.indices[..k] {
            return Err(format!("mrmr seed {seed}: k={k} prefix {:?} vs {:?}", part.indices, &full.indices[..k]));
        }
    }
    let want = mrmr_oracle(&ds, d, bins);
    if full.indices != want {
        return Err(format!("mrmr seed {seed}: {:?} vs oracle {want:?}", full.indices));
    }
    Ok(())
}

// ---------------------------------------------------------------- NCA

pub fn check_nca_gradient(seed: u64) -> Check {
    let mut r = rng(seed);
    let n = r.random_range(8..25);
    let d = r.random_range(2..6);
    let (x, y) = toy(&mut r, n, d, 3, false);
    let mut y = y;
    y[0] = 0;
    y[1] = 1;
    let p = NcaProblem::new(x, &y, None).map_err(|e| e.to_string())?;
    let w = vec![1.0; d];
    let (_, g) = p.objective_and_gradient(&w);
    let h = 1e-5;
    for m in 0..d {
        let (mut wp, mut wm) = (w.clone(), w.clone());
        wp[m] += h;
        wm[m] -= h;
        let fd = (p.objective(&wp) - p.objective(&wm)) / (2.0 * h);
        let rel = (g[m] - fd).abs() / g[m].abs().max(fd.abs()).max(1e-6);
        if rel > 1e-5 {
            return Err(format!("nca seed {seed}: dim {m} analytic {} fd {fd} rel {rel:e}", g[m]));
        }
    }
    Ok(())
}
