mod common;

use common::*;
use ndarray::Array2;
use nvmprobe::chipsim::{new_chip, quantize, Catalog};
use nvmprobe::classifiers::{
    confusion_report, evaluate, fit_pipeline, fold_assignment, model_from_text, model_to_text, ModelKind,
    ModelSpec, PipelineConfig, Selector, SvmFitParams, TreeModel,
};
use nvmprobe::detector::{
    detect_recycled, locate_used_regions, FreshBaseline, RecycledThresholds, SpatialLatencyMap, Verdict,
};
use nvmprobe::features::{fit_standardizer, mrmr_select, FeatureRanking, SelectionMethod};
use nvmprobe::protocol::{dataset_from_csv_arity, dataset_to_csv, split};
use nvmprobe::ClassTag;
use proptest::prelude::*;
use rand::Rng;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn quantized_latency_is_on_grid_and_positive(v in 0.0f64..1e7) {
        let q = quantize(v);
        prop_assert!(q >= 0.01);
        prop_assert!(((q * 100.0).round() - q * 100.0).abs() < 1e-6);
        prop_assert!((q - v).abs() <= 0.005 + 1e-9 || v < 0.01);
    }

    #[test]
    fn simulated_latency_never_drops_with_wear(tag in 0usize..9, chip in 0u64..50, w in 0u64..60_000, dw in 1u64..20_000) {
        let cat = Catalog::builtin();
        let spec = &cat.classes()[tag];
        let mut c = new_chip(spec, chip);
        let addr = (chip as usize * 37) % spec.num_locations;
        c.cycle_location(addr, w).unwrap();
        let a = c.expected_latency(addr).unwrap();
        c.cycle_location(addr, dw).unwrap();
        prop_assert!(c.expected_latency(addr).unwrap() >= a);
        prop_assert!(c.peek_latency(addr).unwrap() > 0.0);
    }

    #[test]
    fn standardized_training_columns_are_zero_mean_unit_variance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = toy(&mut r, 20, 4, 2, false);
        let ds = toy_dataset(&x, &y);
        let st = fit_standardizer(&ds).unwrap();
        for j in 0..4 {
            let z: Vec<f64> = ds.column(j).iter().map(|&v| st.transform_one(j, v)).collect();
            let m = z.iter().sum::<f64>() / z.len() as f64;
            let var = z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / z.len() as f64;
            prop_assert!(m.abs() < 1e-12);
            prop_assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn knn_is_invariant_to_positive_column_scaling(seed in any::<u64>(), col in 0usize..3, scale in 0.01f64..100.0) {
        let mut r = rng(seed);
        let (x, y) = toy(&mut r, 24, 3, 3, false);
        let (q, _) = toy(&mut r, 20, 3, 1, false);
        let mut xs = x.clone();
        let mut qs = q.clone();
        xs.column_mut(col).mapv_inplace(|v| v * scale);
        qs.column_mut(col).mapv_inplace(|v| v * scale);
        let cfg = PipelineConfig::new(ModelSpec::Knn { k: 3 });
        let (a, _) = fit_pipeline(&toy_dataset(&x, &y), &cfg).unwrap();
        let (b, _) = fit_pipeline(&toy_dataset(&xs, &y), &cfg).unwrap();
        for (r1, r2) in q.rows().into_iter().zip(qs.rows()) {
            prop_assert_eq!(a.predict(&r1.to_vec()).unwrap(), b.predict(&r2.to_vec()).unwrap());
        }
    }

    #[test]
    fn tree_predicts_leaf_majority(seed in any::<u64>(), depth in 0usize..6, min_leaf in 1usize..4) {
        let mut r = rng(seed);
        let (x, y) = toy(&mut r, 30, 3, 4, seed % 2 == 0);
        let t = TreeModel::fit(x.view(), &y, depth, min_leaf).unwrap();
        prop_assert!(t.depth() <= depth);
        t.validate(3).unwrap();
        // each leaf's counts are exactly the training members routed there
        let mut routed: std::collections::HashMap<*const _, Vec<usize>> = Default::default();
        for (i, row) in x.rows().into_iter().enumerate() {
            let leaf = t.leaf(row.as_slice().unwrap());
            routed.entry(leaf as *const _).or_default().push(i);
        }
        for members in routed.values() {
            let leaf = t.leaf(x.row(members[0]).as_slice().unwrap());
            let mut counts = vec![0usize; t.classes.len()];
            for &i in members {
                counts[t.classes.binary_search(&y[i]).unwrap()] += 1;
            }
            prop_assert_eq!(&counts, &leaf.counts);
            let max = *counts.iter().max().unwrap();
            let majority = t.classes[counts.iter().position(|&c| c == max).unwrap()];
            prop_assert_eq!(t.predict(x.row(members[0]).as_slice().unwrap()), majority);
        }
    }

    #[test]
    fn svm_votes_are_finite_and_complete(seed in any::<u64>(), k in 2u32..6) {
        let mut r = rng(seed);
        let (x, mut y) = toy(&mut r, 30, 3, k, false);
        for c in 0..k {
            y[c as usize] = c;
        }
        let m = nvmprobe::classifiers::SvmModel::fit(x.view(), &y, &SvmFitParams::default()).unwrap();
        let pairs = (k * (k - 1) / 2) as usize;
        prop_assert_eq!(m.machines.len(), pairs);
        for _ in 0..10 {
            let q: Vec<f64> = (0..3).map(|_| r.random_range(-4.0..4.0)).collect();
            for mach in &m.machines {
                prop_assert!(mach.decision(&q, m.gamma).is_finite());
            }
            prop_assert_eq!(m.votes(&q).unwrap().values().sum::<usize>(), pairs);
        }
    }

    #[test]
    fn confusion_invariants_hold(seed in any::<u64>(), n in 1usize..200) {
        let mut r = rng(seed);
        let classes: Vec<ClassTag> = (0..9).collect();
        let truth: Vec<ClassTag> = (0..n).map(|_| r.random_range(0..9)).collect();
        let pred: Vec<ClassTag> = truth.iter().map(|&t| if r.random_bool(0.8) { t } else { r.random_range(0..9) }).collect();
        let (conf, acc, tpr, fnr) = confusion_report(&classes, &truth, &pred).unwrap();
        prop_assert_eq!(conf.len(), 9);
        let total: usize = conf.iter().flatten().sum();
        prop_assert_eq!(total, n);
        for c in 0..9 {
            let expected = truth.iter().filter(|&&t| t == c as ClassTag).count();
            prop_assert_eq!(conf[c].iter().sum::<usize>(), expected);
            if expected > 0 {
                prop_assert!((tpr[c] + fnr[c] - 1.0).abs() <= 1e-12);
            }
        }
        let trace: usize = (0..9).map(|i| conf[i][i]).sum();
        prop_assert!((acc - trace as f64 / n as f64).abs() <= 1e-12);
    }

    #[test]
    fn folds_partition_with_balanced_class_sizes(seed in any::<u64>(), folds in 2usize..9) {
        let mut r = rng(seed);
        let n = r.random_range(folds * 3..120);
        let y: Vec<ClassTag> = (0..n).map(|i| (i % 3) as ClassTag).collect();
        let x = Array2::zeros((n, 1));
        let ds = toy_dataset(&x, &y);
        let a = fold_assignment(&ds, folds, seed).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert!(a.iter().all(|&f| f < folds));
        for c in 0..3 {
            let mut sizes = vec![0usize; folds];
            for i in (0..n).filter(|&i| y[i] == c) {
                sizes[a[i]] += 1;
            }
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        let mut totals = vec![0usize; folds];
        for &f in &a {
            totals[f] += 1;
        }
        prop_assert!(totals.iter().max().unwrap() - totals.iter().min().unwrap() <= 1);
    }

    #[test]
    fn split_is_stratified_partition(seed in any::<u64>(), frac in 0.05f64..0.95) {
        let mut r = rng(seed);
        let n = r.random_range(6..80);
        let y: Vec<ClassTag> = (0..n).map(|i| (i % 3) as ClassTag).collect();
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let ds = toy_dataset(&x, &y);
        let (tr, te) = split(&ds, frac, seed).unwrap();
        prop_assert_eq!(tr.len() + te.len(), n);
        let mut seen: Vec<f64> = tr.samples().iter().chain(te.samples()).map(|s| s.features[0]).collect();
        seen.sort_by(f64::total_cmp);
        prop_assert_eq!(seen, (0..n).map(|i| i as f64).collect::<Vec<_>>());
        for (c, count) in ds.class_counts() {
            let t = tr.class_counts()[&c];
            prop_assert!(t >= 1 && t < count);
            prop_assert!((t as f64 - frac * count as f64).abs() <= 1.0);
        }
    }

    #[test]
    fn used_regions_are_scale_invariant_and_well_formed(seed in any::<u64>(), scale in 1e-3f64..1e3, flag in 1.05f64..3.0) {
        let mut r = rng(seed);
        let n = r.random_range(1..300);
        let lat: Vec<f64> = (0..n)
            .map(|_| if r.random_bool(0.1) { r.random_range(1.0..4.0) } else { r.random_range(0.9..1.1) })
            .collect();
        let map = SpatialLatencyMap::new(None, lat.clone()).unwrap();
        let scaled = SpatialLatencyMap::new(None, lat.iter().map(|v| v * scale).collect()).unwrap();
        let a = locate_used_regions(&map, flag).unwrap();
        let b = locate_used_regions(&scaled, flag).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!((p.start, p.end), (q.start, q.end));
            prop_assert!((p.peak_ratio - q.peak_ratio).abs() < 1e-9);
        }
        let mut sorted = lat.clone();
        sorted.sort_by(f64::total_cmp);
        let med = if n % 2 == 1 { sorted[n / 2] } else { (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0 };
        for w in a.windows(2) {
            prop_assert!(w[0].end + 2 < w[1].start);
        }
        for reg in &a {
            prop_assert!(reg.start <= reg.end);
            prop_assert!(reg.peak_ratio >= flag);
            prop_assert!(lat[reg.start] / med >= flag && lat[reg.end] / med >= flag);
            for addr in reg.start..=reg.end {
                // interior addresses are either flagged or bridge a one-address gap
                if lat[addr] / med < flag {
                    prop_assert!(lat[addr - 1] / med >= flag && lat[addr + 1] / med >= flag);
                }
            }
        }
        let flagged = lat.iter().filter(|v| **v / med >= flag).count();
        let covered: usize = (0..n).filter(|&i| lat[i] / med >= flag && a.iter().any(|r| r.start <= i && i <= r.end)).count();
        prop_assert_eq!(flagged, covered);
    }

    #[test]
    fn recycled_verdict_is_monotone(base in 1.0f64..1e5, lift in 0.0f64..0.5, step in 0.0f64..0.5, seed in any::<u64>()) {
        let mut r = rng(seed);
        let baseline = FreshBaseline::new([(0, (base, 0.0))].into_iter().collect()).unwrap();
        let t = RecycledThresholds::default();
        let probe: Vec<f64> = (0..100).map(|_| base * (1.0 + lift) * r.random_range(0.95..1.05)).collect();
        let raised: Vec<f64> = probe.iter().map(|v| v * (1.0 + step)).collect();
        let (v1, r1) = detect_recycled(&probe, 0, &baseline, &t).unwrap();
        let (v2, r2) = detect_recycled(&raised, 0, &baseline, &t).unwrap();
        prop_assert!(r2 >= r1);
        prop_assert!(v2 >= v1);
        prop_assert!(v1 != Verdict::Used || r1 >= 1.3);
    }

    #[test]
    fn ranking_text_round_trips(idx in proptest::sample::subsequence((0..50usize).collect::<Vec<_>>(), 1..20), seed in any::<u64>()) {
        let mut r = rng(seed);
        let scores: Vec<f64> = idx.iter().map(|_| r.random_range(-5.0..5.0)).collect();
        let rk = FeatureRanking::new(SelectionMethod::Nca, idx, scores).unwrap();
        let back = FeatureRanking::from_text(&rk.to_text()).unwrap();
        prop_assert_eq!(back.indices, rk.indices);
        for (a, b) in back.scores.iter().zip(&rk.scores) {
            prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-300));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mrmr_is_prefix_consistent(seed in any::<u64>()) {
        let ds = mrmr_toy(seed);
        let full = mrmr_select(&ds, ds.arity(), 8).unwrap();
        for k in 1..=ds.arity() {
            prop_assert_eq!(&mrmr_select(&ds, k, 8).unwrap().indices[..], &full.indices[..k]);
        }
    }

    #[test]
    fn models_round_trip_through_text(seed in any::<u64>(), kind in 0usize..3, select in any::<bool>()) {
        let mut r = rng(seed);
        let (x, mut y) = toy(&mut r, 24, 4, 3, false);
        y[0] = 0;
        y[1] = 1;
        let ds = toy_dataset(&x, &y);
        let kind = [ModelKind::Knn, ModelKind::DecisionTree, ModelKind::GaussianSvm][kind];
        let sel = if select { Selector::mrmr(2) } else { Selector::None };
        let (m, _) = fit_pipeline(&ds, &PipelineConfig::new(ModelSpec::default_for(kind)).with_selector(sel)).unwrap();
        let text = model_to_text(&m);
        let back = model_from_text(&text).unwrap();
        prop_assert_eq!(model_to_text(&back), text);
        prop_assert_eq!(back.predict_all(&ds).unwrap(), m.predict_all(&ds).unwrap());
        let rep = evaluate(&back, &ds).unwrap();
        rep.check_invariants(&ds).unwrap();
    }

    #[test]
    fn dataset_csv_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (x, y) = toy(&mut r, 12, 5, 3, false);
        let x = x.mapv(|v| (v * 1e6).round() / 1e6);
        let ds = toy_dataset(&x, &y);
        let text = dataset_to_csv(&ds);
        let back = dataset_from_csv_arity(&text, 5).unwrap();
        prop_assert_eq!(dataset_to_csv(&back), text);
        prop_assert_eq!(back.labels(), ds.labels());
    }
}

#[test]
fn catalog_csv_round_trips() {
    let cat = Catalog::builtin();
    let back = Catalog::from_csv_str(&cat.to_csv_string()).unwrap();
    assert_eq!(back, cat);
}
