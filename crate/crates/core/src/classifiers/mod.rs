//! KNN, CART and Gaussian-kernel SVM classifiers, the train/predict pipeline,
//! cross-validation, evaluation and model persistence.

pub mod cv;
pub mod knn;
pub mod metrics;
mod model;
pub mod persist;
pub mod svm;
mod sweep;
pub mod timing;
pub mod tree;

pub use cv::{cross_validate, fold_assignment, CvResult, DEFAULT_FOLDS};
pub use knn::KnnModel;
pub use metrics::{confusion_report, evaluate, EvalReport};
pub use model::{
    fit_learner, fit_pipeline, fit_selection, train_knn, train_svm, train_tree, ClassScores, FitTimings, Learner,
    ModelKind, ModelSpec, PipelineConfig, Selector, TrainedModel,
};
pub use persist::{load_model, model_from_text, model_to_text, save_model};
pub use svm::{Gamma, SvmFitParams, SvmModel};
pub use sweep::{sweep, sweep_table_csv, SweepParams};
pub use tree::TreeModel;
