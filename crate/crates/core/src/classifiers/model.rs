use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;

use super::knn::{self, KnnModel};
use super::svm::{Gamma, SvmFitParams, SvmModel};
use super::tree::{self, TreeModel};
use crate::error::{Error, Result};
use crate::features::{
    apply_standardizer, fit_standardizer, mrmr_select, nca_select, FeatureRanking, NcaParams,
    StandardizationStats, DEFAULT_BINS,
};
use crate::protocol::{Dataset, FeatureVector};
use crate::ClassTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Knn,
    DecisionTree,
    GaussianSvm,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Knn => "knn",
            ModelKind::DecisionTree => "tree",
            ModelKind::GaussianSvm => "svm",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(ModelKind::Knn),
            "tree" | "decision_tree" | "dt" => Ok(ModelKind::DecisionTree),
            "svm" | "gaussian_svm" => Ok(ModelKind::GaussianSvm),
            other => Err(Error::validation(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Classifier kind plus its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Knn { k: usize },
    DecisionTree { max_depth: usize, min_leaf: usize },
    GaussianSvm(SvmFitParams),
}

impl ModelSpec {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Knn => ModelSpec::Knn { k: knn::DEFAULT_K },
            ModelKind::DecisionTree => ModelSpec::DecisionTree {
                max_depth: tree::DEFAULT_MAX_DEPTH,
                min_leaf: tree::DEFAULT_MIN_LEAF,
            },
            ModelKind::GaussianSvm => ModelSpec::GaussianSvm(SvmFitParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Knn { .. } => ModelKind::Knn,
            ModelSpec::DecisionTree { .. } => ModelKind::DecisionTree,
            ModelSpec::GaussianSvm(_) => ModelKind::GaussianSvm,
        }
    }

    /// Space-separated `key=value` hyperparameters.
    pub fn params_text(&self) -> String {
        match self {
            ModelSpec::Knn { k } => format!("k={k}"),
            ModelSpec::DecisionTree {
                max_depth,
                min_leaf,
            } => format!("max_depth={max_depth} min_leaf={min_leaf}"),
            ModelSpec::GaussianSvm(p) => {
                let gamma = match p.gamma {
                    Gamma::Auto => "auto".to_string(),
                    Gamma::Value(g) => format!("{g:.8e}"),
                };
                format!(
                    "c={:.8e} gamma={gamma} tol={:.8e} max_passes={}",
                    p.c, p.tol, p.max_passes
                )
            }
        }
    }

    pub fn from_params_text(kind: ModelKind, text: &str) -> Result<Self> {
        let mut spec = Self::default_for(kind);
        for tok in text.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| Error::validation(format!("expected key=value, got {tok:?}")))?;
            let bad = || Error::validation(format!("bad value for {key}: {value:?}"));
            match (&mut spec, key) {
                (ModelSpec::Knn { k }, "k") => *k = value.parse().map_err(|_| bad())?,
                (ModelSpec::DecisionTree { max_depth, .. }, "max_depth") => {
                    *max_depth = value.parse().map_err(|_| bad())?
                }
                (ModelSpec::DecisionTree { min_leaf, .. }, "min_leaf") => {
                    *min_leaf = value.parse().map_err(|_| bad())?
                }
                (ModelSpec::GaussianSvm(p), "c") => p.c = value.parse().map_err(|_| bad())?,
                (ModelSpec::GaussianSvm(p), "gamma") => {
                    p.gamma = if value == "auto" {
                        Gamma::Auto
                    } else {
                        Gamma::Value(value.parse().map_err(|_| bad())?)
                    }
                }
                (ModelSpec::GaussianSvm(p), "tol") => p.tol = value.parse().map_err(|_| bad())?,
                (ModelSpec::GaussianSvm(p), "max_passes") => {
                    p.max_passes = value.parse().map_err(|_| bad())?
                }
                _ => {
                    return Err(Error::validation(format!(
                        "unknown hyperparameter {key:?} for {kind}"
                    )))
                }
            }
        }
        Ok(spec)
    }
}

/// Optional feature-selection stage run on the standardized training set.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    None,
    Mrmr { k: usize, bins: usize },
    Nca(NcaParams),
}

impl Selector {
    pub fn mrmr(k: usize) -> Self {
        Selector::Mrmr {
            k,
            bins: DEFAULT_BINS,
        }
    }

    pub fn nca(k: usize) -> Self {
        Selector::Nca(NcaParams {
            k,
            ..NcaParams::default()
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Selector::None => "none",
            Selector::Mrmr { .. } => "mrmr",
            Selector::Nca(_) => "nca",
        }
    }

    /// Table label such as `All 100 features` or `MRMR (25 features)`.
    pub fn describe(&self, arity: usize) -> String {
        match self {
            Selector::None => format!("All {arity} features"),
            Selector::Mrmr { k, .. } => format!("MRMR ({k} features)"),
            Selector::Nca(p) => format!("NCA ({} features)", p.k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub model: ModelSpec,
    pub selector: Selector,
    /// z-score features with training statistics before selection and fitting.
    pub standardize: bool,
}

impl PipelineConfig {
    pub fn new(model: ModelSpec) -> Self {
        PipelineConfig {
            model,
            selector: Selector::None,
            standardize: true,
        }
    }

    pub fn with_selector(mut self, selector: Selector) -> Self {
        self.selector = selector;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Learner {
    Knn(KnnModel),
    Tree(TreeModel),
    Svm(SvmModel),
}

/// A fitted classifier plus everything needed to map a raw latency group onto its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    /// Width of the raw sample vectors the model accepts.
    pub arity: usize,
    pub standardizer: StandardizationStats,
    pub selected_features: Option<FeatureRanking>,
    pub learner: Learner,
    pub class_names: BTreeMap<ClassTag, String>,
}

/// Wall-clock seconds of the two fitting stages.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitTimings {
    /// Standardizer fit plus feature ranking.
    pub selection_s: f64,
    /// Building the model input matrix plus fitting the classifier.
    pub train_s: f64,
}

/// Per-class score breakdown behind a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub kind: ModelKind,
    /// KNN neighbour votes, tree leaf training counts, or SVM pairwise votes.
    pub per_class: BTreeMap<ClassTag, f64>,
}

impl TrainedModel {
    /// Bundle fitted parts with the class names of `train`.
    pub fn assemble(
        train: &Dataset,
        spec: ModelSpec,
        standardizer: StandardizationStats,
        selected_features: Option<FeatureRanking>,
        learner: Learner,
    ) -> Self {
        TrainedModel {
            spec,
            arity: train.arity(),
            standardizer,
            selected_features,
            learner,
            class_names: train
                .classes()
                .into_iter()
                .map(|c| (c, train.class_names().get(&c).cloned().unwrap_or_default()))
                .collect(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind()
    }

    /// Features the classifier sees, in order.
    pub fn feature_indices(&self) -> Vec<usize> {
        match &self.selected_features {
            Some(r) => r.indices.clone(),
            None => (0..self.arity).collect(),
        }
    }

    pub fn classes(&self) -> Vec<ClassTag> {
        self.class_names.keys().copied().collect()
    }

    fn prepare(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: x.len(),
            });
        }
        Ok(match &self.selected_features {
            Some(r) => self.standardizer.transform_selected(x, &r.indices),
            None => self.standardizer.transform(x),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassTag> {
        let z = self.prepare(x)?;
        match &self.learner {
            Learner::Knn(m) => Ok(m.predict(&z)),
            Learner::Tree(m) => Ok(m.predict(&z)),
            Learner::Svm(m) => m.predict(&z),
        }
    }

    pub fn predict_sample(&self, s: &FeatureVector) -> Result<ClassTag> {
        self.predict(&s.features)
    }

    pub fn predict_all(&self, ds: &Dataset) -> Result<Vec<ClassTag>> {
        ds.samples().iter().map(|s| self.predict(&s.features)).collect()
    }

    pub fn scores(&self, x: &[f64]) -> Result<ClassScores> {
        let z = self.prepare(x)?;
        let per_class = match &self.learner {
            Learner::Knn(m) => m
                .votes(&z)
                .into_iter()
                .map(|(c, v)| (c, v as f64))
                .collect(),
            Learner::Tree(m) => {
                let leaf = m.leaf(&z);
                m.classes
                    .iter()
                    .zip(&leaf.counts)
                    .map(|(&c, &n)| (c, n as f64))
                    .collect()
            }
            Learner::Svm(m) => m
                .votes(&z)?
                .into_iter()
                .map(|(c, v)| (c, v as f64))
                .collect(),
        };
        Ok(ClassScores {
            kind: self.kind(),
            per_class,
        })
    }
}

fn input_matrix(train: &Dataset, stats: &StandardizationStats, indices: &[usize]) -> Array2<f64> {
    let mut m = Array2::zeros((train.len(), indices.len()));
    for (mut row, s) in m.rows_mut().into_iter().zip(train.samples()) {
        for (dst, &j) in row.iter_mut().zip(indices) {
            *dst = stats.transform_one(j, s.features[j]);
        }
    }
    m
}

/// Standardizer fit plus feature ranking on a training set, with the
/// wall-clock seconds both took.
pub fn fit_selection(
    train: &Dataset,
    selector: &Selector,
    standardize: bool,
) -> Result<(StandardizationStats, Option<FeatureRanking>, f64)> {
    if train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    let t0 = Instant::now();
    let standardizer = if standardize {
        fit_standardizer(train)?
    } else {
        StandardizationStats::identity(train.arity())
    };
    let ranking = match selector {
        Selector::None => None,
        Selector::Mrmr { k, bins } => {
            let z = apply_standardizer(&standardizer, train)?;
            Some(mrmr_select(&z, *k, *bins)?)
        }
        Selector::Nca(p) => {
            let z = apply_standardizer(&standardizer, train)?;
            Some(nca_select(&z, p)?)
        }
    };
    Ok((standardizer, ranking, t0.elapsed().as_secs_f64()))
}

/// Fit the standardizer, run the selector, then fit the classifier on the
/// selected standardized columns.
pub fn fit_pipeline(train: &Dataset, config: &PipelineConfig) -> Result<(TrainedModel, FitTimings)> {
    let (standardizer, ranking, selection_s) = fit_selection(train, &config.selector, config.standardize)?;
    let (learner, train_s) = fit_learner(train, &standardizer, ranking.as_ref(), &config.model)?;
    let model = TrainedModel::assemble(train, config.model, standardizer, ranking, learner);
    Ok((
        model,
        FitTimings {
            selection_s,
            train_s,
        },
    ))
}

/// Classifier fit on an already-chosen standardizer and ranking; returns the
/// learner and the wall-clock seconds it took, matrix construction included.
pub fn fit_learner(
    train: &Dataset,
    standardizer: &StandardizationStats,
    ranking: Option<&FeatureRanking>,
    spec: &ModelSpec,
) -> Result<(Learner, f64)> {
    let t0 = Instant::now();
    let indices: Vec<usize> = match ranking {
        Some(r) => {
            r.check_arity(train.arity())?;
            r.indices.clone()
        }
        None => (0..train.arity()).collect(),
    };
    let x = input_matrix(train, standardizer, &indices);
    let y = train.labels();
    let learner = match *spec {
        ModelSpec::Knn { k } => Learner::Knn(KnnModel::fit(x.view(), &y, k)?),
        ModelSpec::DecisionTree {
            max_depth,
            min_leaf,
        } => Learner::Tree(TreeModel::fit(x.view(), &y, max_depth, min_leaf)?),
        ModelSpec::GaussianSvm(p) => Learner::Svm(SvmModel::fit(x.view(), &y, &p)?),
    };
    Ok((learner, t0.elapsed().as_secs_f64()))
}

pub fn train_knn(train: &Dataset, k: usize) -> Result<TrainedModel> {
    Ok(fit_pipeline(train, &PipelineConfig::new(ModelSpec::Knn { k }))?.0)
}

pub fn train_tree(train: &Dataset, max_depth: usize, min_leaf: usize) -> Result<TrainedModel> {
    let spec = ModelSpec::DecisionTree {
        max_depth,
        min_leaf,
    };
    Ok(fit_pipeline(train, &PipelineConfig::new(spec))?.0)
}

pub fn train_svm(train: &Dataset, params: SvmFitParams) -> Result<TrainedModel> {
    Ok(fit_pipeline(train, &PipelineConfig::new(ModelSpec::GaussianSvm(params)))?.0)
}
