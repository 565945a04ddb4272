use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nvmprobe::classifiers::{Gamma, ModelSpec, PipelineConfig, Selector, SvmFitParams};
use nvmprobe::features::NcaParams;
use nvmprobe::{Error, Result};

use crate::config::Manifest;

/// Latency-signature forensics for NVM chips: simulate, learn, detect.
#[derive(Debug, Parser)]
#[command(name = "nvmprobe", version, propagate_version = true)]
pub struct Cli {
    /// Worker threads for parallel stages; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    /// Flat key=value file supplying flags; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory that relative output paths are resolved against
    #[arg(long, global = true, env = "NVMPROBE_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

pub const SUBCOMMANDS: [&str; 9] = [
    "catalog", "simulate", "dataset", "train", "crossval", "eval", "sweep", "predict", "scan",
];

/// Global options that take a value, for locating the subcommand in raw argv.
pub const GLOBAL_VALUE_FLAGS: [&str; 3] = ["--jobs", "--config", "--out-dir"];

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump a chip catalog (the builtin one unless --catalog is given)
    Catalog(CatalogArgs),
    /// Per-cycle latency trace of one location, or window statistics with --stats
    Simulate(SimulateArgs),
    /// Build a labeled feature dataset from simulated chips
    Dataset(DatasetArgs),
    /// Fit a classifier pipeline and save the model
    Train(TrainArgs),
    /// Stratified k-fold cross-validation of a pipeline
    Crossval(CrossvalArgs),
    /// Evaluate a saved model on a dataset
    Eval(EvalArgs),
    /// Evaluate every model x selector combination on a train/test pair
    Sweep(SweepArgs),
    /// Identify a probe's chip class and judge whether it is recycled
    Predict(PredictArgs),
    /// Locate used address regions on a latency map
    Scan(ScanArgs),
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    /// Catalog CSV to validate and re-emit
    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Output file; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Chip class tag
    #[arg(long, required_unless_present = "stats")]
    pub class: Option<u32>,

    /// Root seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Chip index within the class
    #[arg(long, default_value_t = 0)]
    pub chip: usize,

    /// Address to cycle
    #[arg(long, default_value_t = 0)]
    pub addr: usize,

    /// Recorded cycles
    #[arg(long, default_value_t = 50_000)]
    pub cycles: u64,

    /// Unrecorded cycles applied before recording starts
    #[arg(long, default_value_t = 0)]
    pub pre_cycles: u64,

    /// Emit BEFORE/AFTER window statistics for every class instead of a trace
    #[arg(long)]
    pub stats: bool,

    /// Chips per class (stats mode)
    #[arg(long, default_value_t = 2)]
    pub chips: usize,

    /// Locations per chip (stats mode)
    #[arg(long, default_value_t = 5)]
    pub locations: usize,

    /// Checkpoints in cycles (stats mode)
    #[arg(long, value_delimiter = ',', default_value = "1000,6000,16000,36000")]
    pub checkpoints: Vec<u64>,

    /// Cycles per window (stats mode)
    #[arg(long, default_value_t = 50)]
    pub span: u64,

    /// Output CSV [default: trace_class<C>.csv or stats.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub catalog: Option<PathBuf>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value_t = 3)]
    pub chips_per_class: usize,

    /// Sampled locations per chip
    #[arg(long, default_value_t = 12)]
    pub locations: usize,

    /// Wear checkpoints in cycles
    #[arg(long, value_delimiter = ',', default_value = "0,1000,5000,10000,15000,30000,50000")]
    pub checkpoints: Vec<u64>,

    /// Consecutive latencies per sample (feature count)
    #[arg(long, default_value_t = 100)]
    pub group: usize,

    /// Also write stratified <stem>.train/<stem>.test files with this train fraction
    #[arg(long)]
    pub split: Option<f64>,

    #[arg(long, default_value = "dataset.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Knn,
    Tree,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectorArg {
    None,
    Mrmr,
    Nca,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Knn)]
    pub model: ModelArg,

    /// Neighbours for KNN
    #[arg(long, default_value_t = 5)]
    pub knn_k: usize,

    #[arg(long, default_value_t = 20)]
    pub tree_max_depth: usize,

    #[arg(long, default_value_t = 1)]
    pub tree_min_leaf: usize,

    /// SVM box constraint C
    #[arg(long, default_value_t = 1.0)]
    pub svm_c: f64,

    /// RBF gamma, or "auto" for 1 / (features x mean variance)
    #[arg(long, default_value = "auto")]
    pub svm_gamma: String,

    #[arg(long, default_value_t = 1e-3)]
    pub svm_tol: f64,

    /// SMO iteration cap is max_passes x 100 x n
    #[arg(long, default_value_t = 10)]
    pub svm_max_passes: usize,

    #[arg(long, value_enum, default_value_t = SelectorArg::None)]
    pub selector: SelectorArg,

    /// Features kept by the selector
    #[arg(long, default_value_t = 25)]
    pub select_k: usize,

    /// Histogram bins for mutual information
    #[arg(long, default_value_t = 16)]
    pub bins: usize,

    #[arg(long, default_value_t = 200)]
    pub nca_iters: usize,

    #[arg(long, default_value_t = 0.01)]
    pub nca_lr: f64,

    /// NCA weight penalty [default: 1 / training samples]
    #[arg(long)]
    pub nca_lambda: Option<f64>,

    /// Fit NCA on at most this many training samples
    #[arg(long)]
    pub nca_subsample: Option<usize>,

    /// Skip z-scoring of features
    #[arg(long)]
    pub no_standardize: bool,
}

impl ModelArgs {
    pub fn pipeline(&self, seed: u64) -> Result<PipelineConfig> {
        let model = match self.model {
            ModelArg::Knn => ModelSpec::Knn { k: self.knn_k },
            ModelArg::Tree => ModelSpec::DecisionTree {
                max_depth: self.tree_max_depth,
                min_leaf: self.tree_min_leaf,
            },
            ModelArg::Svm => ModelSpec::GaussianSvm(SvmFitParams {
                c: self.svm_c,
                gamma: parse_gamma(&self.svm_gamma)?,
                tol: self.svm_tol,
                max_passes: self.svm_max_passes,
            }),
        };
        let selector = match self.selector {
            SelectorArg::None => Selector::None,
            SelectorArg::Mrmr => Selector::Mrmr {
                k: self.select_k,
                bins: self.bins,
            },
            SelectorArg::Nca => Selector::Nca(NcaParams {
                k: self.select_k,
                iters: self.nca_iters,
                learning_rate: self.nca_lr,
                lambda: self.nca_lambda,
                subsample: self.nca_subsample.map(|n| (n, seed)),
            }),
        };
        Ok(PipelineConfig {
            model,
            selector,
            standardize: !self.no_standardize,
        })
    }

    pub fn record(&self, m: &mut Manifest) {
        m.set("model", enum_name(self.model));
        m.set("knn-k", self.knn_k);
        m.set("tree-max-depth", self.tree_max_depth);
        m.set("tree-min-leaf", self.tree_min_leaf);
        m.set("svm-c", self.svm_c);
        m.set("svm-gamma", &self.svm_gamma);
        m.set("svm-tol", self.svm_tol);
        m.set("svm-max-passes", self.svm_max_passes);
        m.set("selector", enum_name(self.selector));
        m.set("select-k", self.select_k);
        m.set("bins", self.bins);
        m.set("nca-iters", self.nca_iters);
        m.set("nca-lr", self.nca_lr);
        if let Some(l) = self.nca_lambda {
            m.set("nca-lambda", l);
        }
        if let Some(n) = self.nca_subsample {
            m.set("nca-subsample", n);
        }
        m.set("no-standardize", self.no_standardize);
    }
}

pub fn enum_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn parse_gamma(s: &str) -> Result<Gamma> {
    if s == "auto" {
        return Ok(Gamma::Auto);
    }
    match s.parse::<f64>() {
        Ok(g) if g.is_finite() && g > 0.0 => Ok(Gamma::Value(g)),
        _ => Err(Error::validation(format!("svm-gamma must be \"auto\" or a positive number, got {s:?}"))),
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset CSV
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Seed for NCA subsampling
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Model file; timings go to <out>.timing and parameters to <out>.manifest
    #[arg(long, default_value = "model.txt")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Fold count; equal to the sample count for leave-one-out
    #[arg(long, default_value_t = 8)]
    pub folds: usize,

    /// Seed for fold assignment and NCA subsampling
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value = "crossval.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Saved model file
    #[arg(long)]
    pub model: PathBuf,

    /// Test dataset CSV
    #[arg(long)]
    pub data: PathBuf,

    /// Writes <prefix>.txt and <prefix>.csv
    #[arg(long, default_value = "eval")]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub train: PathBuf,

    #[arg(long)]
    pub test: PathBuf,

    /// Features kept by MRMR and NCA
    #[arg(long, default_value_t = 25)]
    pub select_k: usize,

    /// Fit NCA on at most this many training samples
    #[arg(long)]
    pub nca_subsample: Option<usize>,

    /// Timed training repeats; the fastest counts
    #[arg(long, default_value_t = 3)]
    pub train_repeats: usize,

    /// Timed inference repeats; the fastest counts
    #[arg(long, default_value_t = 15)]
    pub infer_repeats: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Writes <prefix>.csv plus one <prefix>_<method>_<selector>.csv per cell
    #[arg(long, default_value = "sweep")]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    /// Analytic fresh mean of each catalog class
    Catalog,
    /// Fresh windows measured on simulated chips
    Measured,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Probe CSV: a latency_us column or a single column of latencies
    #[arg(long)]
    pub probe: PathBuf,

    #[arg(long)]
    pub catalog: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = BaselineArg::Catalog)]
    pub baseline: BaselineArg,

    /// Seed for the measured baseline
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Elevation ratio at or below which a probe is FRESH
    #[arg(long, default_value_t = 1.1)]
    pub fresh_max: f64,

    /// Elevation ratio at or above which a probe is USED
    #[arg(long, default_value_t = 1.3)]
    pub used_min: f64,

    /// Writes <prefix>.txt and <prefix>.csv
    #[arg(long, default_value = "report")]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// Map CSV (addr,latency_us); otherwise a chip is simulated
    #[arg(long, conflicts_with = "class")]
    pub map: Option<PathBuf>,

    #[arg(long)]
    pub catalog: Option<PathBuf>,

    /// Class of the simulated chip
    #[arg(long, required_unless_present = "map")]
    pub class: Option<u32>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value_t = 0)]
    pub chip: usize,

    /// Worn spots on the simulated chip, taking 1k, 5k, 10k, 15k, 30k, 50k cycles in turn
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=6))]
    pub used_spots: u8,

    /// Minimum address distance between worn spots
    #[arg(long, default_value_t = 4)]
    pub min_gap: usize,

    /// Elevation over the map median that flags an address
    #[arg(long, default_value_t = 1.5)]
    pub flag_ratio: f64,

    /// Writes <prefix>.txt and <prefix>.csv; simulated chips add _map, _truth and .manifest
    #[arg(long, default_value = "scan")]
    pub out_prefix: PathBuf,
}
