mod common;

use common::*;
use nvmprobe::chipsim::{new_chip, Catalog};
use nvmprobe::classifiers::svm::{auto_gamma, iteration_cap};
use nvmprobe::classifiers::{cross_validate, ModelSpec, PipelineConfig, SvmFitParams, SvmModel};
use nvmprobe::seed;
use rand::Rng;

#[test]
fn knn_matches_exhaustive_sort() {
    for s in 0..120 {
        check_knn_instance(s).unwrap();
    }
}

#[test]
fn tree_root_matches_gini_enumeration() {
    for s in 0..120 {
        check_tree_instance(s).unwrap();
    }
}

#[test]
fn smo_matches_grid_and_passes_kkt() {
    for s in 0..100 {
        check_svm_instance(s).unwrap();
    }
}

#[test]
fn larger_smo_problems_pass_kkt() {
    for s in 0..20 {
        let case = svm_case(1000 + s, 25);
        let sol = nvmprobe::classifiers::svm::smo_solve(&case.kernel, &case.y, case.c, 1e-3, iteration_cap(10, 25)).unwrap();
        assert!(sol.converged);
        svm_kkt_audit(&case, &sol.alpha, 1e-3).unwrap();
    }
}

#[test]
fn trained_machines_respect_dual_constraints() {
    let mut r = rng(7);
    let (x, y) = toy(&mut r, 30, 3, 4, false);
    let params = SvmFitParams::default();
    let m = SvmModel::fit(x.view(), &y, &params).unwrap();
    assert_eq!(m.machines.len(), 6);
    assert!((m.gamma - auto_gamma(x.view())).abs() < 1e-15);
    for mach in &m.machines {
        let sum: f64 = mach.coef.iter().sum();
        assert!(sum.abs() < 1e-9, "sum alpha*y = {sum}");
        assert!(mach.coef.iter().all(|a| a.abs() <= params.c + 1e-12));
    }
}

#[test]
fn mutual_information_matches_entropy_oracle() {
    for s in 0..50 {
        check_mi_instance(s).unwrap();
    }
}

#[test]
fn mrmr_matches_greedy_oracle_and_is_prefix_consistent() {
    for s in 0..30 {
        check_mrmr_instance(s).unwrap();
    }
}

#[test]
fn nca_gradient_matches_central_differences() {
    for s in 0..10 {
        check_nca_gradient(s).unwrap();
    }
}

#[test]
fn leave_one_out_equals_nearest_other_point() {
    let mut r = rng(11);
    let (x, y) = toy(&mut r, 25, 3, 3, false);
    let ds = toy_dataset(&x, &y);
    let mut cfg = PipelineConfig::new(ModelSpec::Knn { k: 1 });
    cfg.standardize = false;
    let cv = cross_validate(&cfg, &ds, ds.len(), 0).unwrap();
    let mut hits = 0;
    for i in 0..ds.len() {
        let nearest = (0..ds.len())
            .filter(|&j| j != i)
            .min_by(|&a, &b| {
                let d = |j: usize| x.row(i).iter().zip(x.row(j)).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
                d(a).partial_cmp(&d(b)).unwrap()
            })
            .unwrap();
        hits += (y[nearest] == y[i]) as usize;
    }
    assert_eq!(cv.pooled_accuracy, hits as f64 / ds.len() as f64);
    assert_eq!(cv.folds(), ds.len());
}

#[test]
fn chip_factor_spread_matches_sigma() {
    let cat = Catalog::builtin();
    let spec = &cat.classes()[0];
    let n = 4000;
    let f: Vec<f64> = (0..n)
        .map(|i| new_chip(spec, seed::derive(99, &[i])).chip_factor())
        .collect();
    let mean = f.iter().sum::<f64>() / n as f64;
    let sd = (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!((mean - 1.0).abs() < 4.0 * spec.chip_sigma / (n as f64).sqrt());
    assert!((sd / spec.chip_sigma - 1.0).abs() < 0.06, "sd {sd}");
}

#[test]
fn noise_is_lognormal_with_catalog_sigma() {
    let cat = Catalog::builtin();
    let spec = &cat.classes()[6];
    let mut chip = new_chip(spec, 5);
    let addr = rng(1).random_range(0..spec.num_locations);
    let expected = chip.expected_latency(addr).unwrap();
    let logs: Vec<f64> = (0..4000)
        .map(|_| (chip.latency_sample(addr, false).unwrap() / expected).ln())
        .collect();
    // peek without advancing repeats the same draw
    assert!(logs.windows(2).all(|w| w[0] == w[1]));
    let mut chip = new_chip(spec, 5);
    let mut logs = Vec::new();
    for _ in 0..4000 {
        let e = chip.expected_latency(addr).unwrap();
        logs.push((chip.latency_sample(addr, true).unwrap() / e).ln());
    }
    let n = logs.len() as f64;
    let mean = logs.iter().sum::<f64>() / n;
    let sd = (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 0.01, "mean {mean}");
    assert!((sd / spec.noise_sigma - 1.0).abs() < 0.06, "sd {sd}");
}
