use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nvmprobe::chipsim::{new_chip, Catalog, USED_SPOT_CYCLES};
use nvmprobe::classifiers::{
    cross_validate, evaluate, fit_pipeline, load_model, save_model, sweep, sweep_table_csv, SweepParams,
};
use nvmprobe::detector::{
    locate_used_regions, DetectionReport, FreshBaseline, RecycledThresholds, SpatialLatencyMap,
};
use nvmprobe::features::NcaParams;
use nvmprobe::protocol::{
    build_dataset, chip_seed_for, collect_trace_after, fresh_window_stats, latency_stats, load_dataset,
    read_latency_column, save_dataset, split, stats_to_csv, DatasetParams, StatsParams,
};
use nvmprobe::{fsutil, Error, Result};

use crate::args::*;
use crate::config::{parse_pairs, Manifest};

pub struct Ctx {
    pub out_dir: PathBuf,
}

impl Ctx {
    fn out(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn write(&self, path: &Path, text: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fsutil::write_atomic(path, text.as_bytes())
    }
}

/// `path` with `suffix` appended to its file name.
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// `dir/stem.<tag>.ext` for `dir/stem.ext`.
fn tagged(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

fn catalog(path: &Option<PathBuf>) -> Result<Catalog> {
    match path {
        Some(p) => Catalog::from_csv_str(&fsutil::read_to_string(p)?),
        None => Ok(Catalog::builtin()),
    }
}

fn record_catalog(m: &mut Manifest, path: &Option<PathBuf>) {
    if let Some(p) = path {
        m.set_path("catalog", p);
    }
}

pub fn run(ctx: &Ctx, cmd: Command) -> Result<()> {
    match cmd {
        Command::Catalog(a) => cmd_catalog(ctx, a),
        Command::Simulate(a) => cmd_simulate(ctx, a),
        Command::Dataset(a) => cmd_dataset(ctx, a),
        Command::Train(a) => cmd_train(ctx, a),
        Command::Crossval(a) => cmd_crossval(ctx, a),
        Command::Eval(a) => cmd_eval(ctx, a),
        Command::Sweep(a) => cmd_sweep(ctx, a),
        Command::Predict(a) => cmd_predict(ctx, a),
        Command::Scan(a) => cmd_scan(ctx, a),
    }
}

fn cmd_catalog(ctx: &Ctx, a: CatalogArgs) -> Result<()> {
    let text = catalog(&a.catalog)?.to_csv_string();
    match a.out {
        Some(p) => {
            let path = ctx.out(&p);
            ctx.write(&path, &text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_simulate(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    let cat = catalog(&a.catalog)?;
    let mut m = Manifest::new("simulate");
    record_catalog(&mut m, &a.catalog);
    m.set("seed", a.seed);
    if a.stats {
        let params = StatsParams {
            chips: a.chips,
            locations: a.locations,
            checkpoints: a.checkpoints.clone(),
            span: a.span,
            seed: a.seed,
        };
        let stats = latency_stats(&cat, &params)?;
        let out = a.out.unwrap_or_else(|| "stats.csv".into());
        let path = ctx.out(&out);
        ctx.write(&path, &stats_to_csv(&stats))?;
        m.set("stats", true);
        m.set("chips", a.chips);
        m.set("locations", a.locations);
        m.set_list("checkpoints", &a.checkpoints);
        m.set("span", a.span);
        m.set_path("out", &out);
        ctx.write(&suffixed(&path, ".manifest"), &m.to_text())?;
        println!("wrote {} windows to {}", stats.len(), path.display());
        return Ok(());
    }
    let class = a.class.expect("clap requires --class without --stats");
    let spec = cat
        .get(class)
        .ok_or_else(|| Error::validation(format!("unknown class tag {class}; catalog has {:?}", cat.tags())))?;
    let chip_seed = chip_seed_for(a.seed, class, a.chip);
    let trace = collect_trace_after(spec, chip_seed, a.addr, a.pre_cycles, a.cycles)?;
    let out = a.out.unwrap_or_else(|| format!("trace_class{class}.csv").into());
    let path = ctx.out(&out);
    ctx.write(&path, &trace.to_csv_string())?;
    m.set("class", class);
    m.set("chip", a.chip);
    m.set("addr", a.addr);
    m.set("cycles", a.cycles);
    m.set("pre-cycles", a.pre_cycles);
    m.set_path("out", &out);
    ctx.write(&suffixed(&path, ".manifest"), &m.to_text())?;
    println!("wrote {} cycles of {} to {}", trace.len(), spec.label(), path.display());
    Ok(())
}

fn cmd_dataset(ctx: &Ctx, a: DatasetArgs) -> Result<()> {
    let cat = catalog(&a.catalog)?;
    let params = DatasetParams {
        chips_per_class: a.chips_per_class,
        checkpoints: a.checkpoints.clone(),
        group: a.group,
        locations_per_chip: a.locations,
        seed: a.seed,
    };
    let ds = build_dataset(&cat, &params)?;
    let path = ctx.out(&a.out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_dataset(&ds, &path)?;
    println!("wrote {} samples x {} features to {}", ds.len(), ds.arity(), path.display());
    if let Some(frac) = a.split {
        let (train, test) = split(&ds, frac, a.seed)?;
        for (part, tag) in [(&train, "train"), (&test, "test")] {
            let p = tagged(&path, tag);
            save_dataset(part, &p)?;
            println!("wrote {} samples to {}", part.len(), p.display());
        }
    }
    let mut m = Manifest::new("dataset");
    record_catalog(&mut m, &a.catalog);
    m.set("seed", a.seed);
    m.set("chips-per-class", a.chips_per_class);
    m.set("locations", a.locations);
    m.set_list("checkpoints", &a.checkpoints);
    m.set("group", a.group);
    if let Some(f) = a.split {
        m.set("split", f);
    }
    m.set_path("out", &a.out);
    ctx.write(&suffixed(&path, ".manifest"), &m.to_text())
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let config = a.model.pipeline(a.seed)?;
    let (model, t) = fit_pipeline(&ds, &config)?;
    let path = ctx.out(&a.out);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_model(&model, &path)?;
    ctx.write(
        &suffixed(&path, ".timing"),
        &format!("selection_s={:.6}\ntrain_s={:.6}\n", t.selection_s, t.train_s),
    )?;
    let mut m = Manifest::new("train");
    m.set_path("data", &a.data);
    a.model.record(&mut m);
    m.set("seed", a.seed);
    m.set_path("out", &a.out);
    ctx.write(&suffixed(&path, ".manifest"), &m.to_text())?;
    println!(
        "trained {} ({}) on {} samples in {:.4} s; model at {}",
        model.kind(),
        config.selector.describe(ds.arity()),
        ds.len(),
        t.selection_s + t.train_s,
        path.display()
    );
    Ok(())
}

fn cmd_crossval(ctx: &Ctx, a: CrossvalArgs) -> Result<()> {
    let ds = load_dataset(&a.data)?;
    let config = a.model.pipeline(a.seed)?;
    let cv = cross_validate(&config, &ds, a.folds, a.seed)?;
    let path = ctx.out(&a.out);
    ctx.write(&path, &cv.to_csv())?;
    let mut m = Manifest::new("crossval");
    m.set_path("data", &a.data);
    a.model.record(&mut m);
    m.set("folds", a.folds);
    m.set("seed", a.seed);
    m.set_path("out", &a.out);
    ctx.write(&suffixed(&path, ".manifest"), &m.to_text())?;
    println!(
        "{}-fold mean accuracy {:.4}, pooled {:.4}; folds at {}",
        cv.folds(),
        cv.mean_accuracy(),
        cv.pooled_accuracy,
        path.display()
    );
    Ok(())
}

fn read_timing(model_path: &Path) -> Result<Option<(f64, f64)>> {
    let p = suffixed(model_path, ".timing");
    if !p.exists() {
        return Ok(None);
    }
    let (mut sel, mut train) = (0.0, 0.0);
    for (k, v) in parse_pairs(&fsutil::read_to_string(&p)?)? {
        let x: f64 = v
            .parse()
            .map_err(|_| Error::validation(format!("bad {k} in {}", p.display())))?;
        match k.as_str() {
            "selection-s" => sel = x,
            "train-s" => train = x,
            _ => {}
        }
    }
    Ok(Some((sel, train)))
}

const ROW_HEADER: &str = "method,selector,accuracy,train_s,infer_s,infer_per_sample_s";

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let ds = load_dataset(&a.data)?;
    let mut report = evaluate(&model, &ds)?;
    if let Some((sel, train)) = read_timing(&a.model)? {
        report = report.with_fit_times(sel, train);
    }
    report.check_invariants(&ds)?;
    let prefix = ctx.out(&a.out_prefix);
    ctx.write(&suffixed(&prefix, ".txt"), &report.to_text())?;
    ctx.write(&suffixed(&prefix, ".csv"), &report.to_csv())?;
    println!("{ROW_HEADER}");
    println!(
        "{},{},{:.4},{:.4},{:.4},{:.4e}",
        report.method,
        report.selector,
        report.accuracy,
        report.selection_time_s + report.train_time_s,
        report.infer_time_s,
        report.infer_per_sample_s
    );
    Ok(())
}

fn cmd_sweep(ctx: &Ctx, a: SweepArgs) -> Result<()> {
    let train = load_dataset(&a.train)?;
    let test = load_dataset(&a.test)?;
    let nca = NcaParams {
        subsample: a.nca_subsample.map(|n| (n, a.seed)),
        ..NcaParams::default()
    };
    let params = SweepParams {
        train_repeats: a.train_repeats,
        infer_repeats: a.infer_repeats,
        ..SweepParams::standard(a.select_k, nca)
    };
    let reports = sweep(&train, &test, &params)?;
    let prefix = ctx.out(&a.out_prefix);
    let table = sweep_table_csv(&reports);
    ctx.write(&suffixed(&prefix, ".csv"), &table)?;
    for r in &reports {
        let cell = suffixed(&prefix, &format!("_{}_{}.csv", r.method, r.selector));
        ctx.write(&cell, &r.to_csv())?;
    }
    let mut m = Manifest::new("sweep");
    m.set_path("train", &a.train);
    m.set_path("test", &a.test);
    m.set("select-k", a.select_k);
    if let Some(n) = a.nca_subsample {
        m.set("nca-subsample", n);
    }
    m.set("train-repeats", a.train_repeats);
    m.set("infer-repeats", a.infer_repeats);
    m.set("seed", a.seed);
    m.set_path("out-prefix", &a.out_prefix);
    ctx.write(&suffixed(&prefix, ".manifest"), &m.to_text())?;
    print!("{table}");
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let probe = read_latency_column(&fsutil::read_to_string(&a.probe)?)?;
    let cat = catalog(&a.catalog)?;
    let baseline = match a.baseline {
        BaselineArg::Catalog => FreshBaseline::from_catalog(&cat),
        BaselineArg::Measured => {
            let params = StatsParams {
                span: probe.len().max(1) as u64,
                seed: a.seed,
                ..StatsParams::default()
            };
            FreshBaseline::from_window_stats(&fresh_window_stats(&cat, &params)?)?
        }
    };
    let thresholds = RecycledThresholds::new(a.fresh_max, a.used_min)?;
    let report = DetectionReport::for_probe(&probe, &model, &baseline, &thresholds)?;
    let prefix = ctx.out(&a.out_prefix);
    let text = report.to_text();
    ctx.write(&suffixed(&prefix, ".txt"), &text)?;
    ctx.write(&suffixed(&prefix, ".csv"), &report.to_csv())?;
    print!("{text}");
    Ok(())
}

fn cmd_scan(ctx: &Ctx, a: ScanArgs) -> Result<()> {
    let prefix = ctx.out(&a.out_prefix);
    let map = match (&a.map, a.class) {
        (Some(p), _) => SpatialLatencyMap::from_csv_str(&fsutil::read_to_string(p)?)?,
        (None, Some(class)) => {
            let cat = catalog(&a.catalog)?;
            let spec = cat
                .get(class)
                .ok_or_else(|| Error::validation(format!("unknown class tag {class}; catalog has {:?}", cat.tags())))?;
            let mut chip = new_chip(spec, chip_seed_for(a.seed, class, a.chip));
            let cycles = &USED_SPOT_CYCLES[..a.used_spots as usize];
            let spots = chip.wear_random_spots(cycles, a.min_gap, a.seed)?;
            let map = chip.full_chip_scan();
            let mut truth = String::from("addr,cycles,expected_elevation\n");
            let mut order: Vec<(usize, u64)> = spots.iter().copied().zip(cycles.iter().copied()).collect();
            order.sort_unstable();
            for (addr, w) in order {
                writeln!(truth, "{addr},{w},{:.6}", spec.wear_factor(w)).unwrap();
            }
            ctx.write(&suffixed(&prefix, "_map.csv"), &map.to_csv_string())?;
            ctx.write(&suffixed(&prefix, "_truth.csv"), &truth)?;
            let mut m = Manifest::new("scan");
            record_catalog(&mut m, &a.catalog);
            m.set("class", class);
            m.set("seed", a.seed);
            m.set("chip", a.chip);
            m.set("used-spots", a.used_spots);
            m.set("min-gap", a.min_gap);
            m.set("flag-ratio", a.flag_ratio);
            m.set_path("out-prefix", &a.out_prefix);
            ctx.write(&suffixed(&prefix, ".manifest"), &m.to_text())?;
            map
        }
        (None, None) => unreachable!("clap requires --map or --class"),
    };
    let regions = locate_used_regions(&map, a.flag_ratio)?;
    let report = DetectionReport::for_scan(regions, a.flag_ratio);
    let text = report.to_text();
    ctx.write(&suffixed(&prefix, ".txt"), &text)?;
    ctx.write(&suffixed(&prefix, ".csv"), &report.to_csv())?;
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_helpers() {
        assert_eq!(suffixed(Path::new("a/m.txt"), ".timing"), PathBuf::from("a/m.txt.timing"));
        assert_eq!(tagged(Path::new("a/ds.csv"), "train"), PathBuf::from("a/ds.train.csv"));
        assert_eq!(tagged(Path::new("ds"), "test"), PathBuf::from("ds.test"));
    }
}
