//! The algorithm x selector grid: one ranking per selector, shared by every
//! algorithm, with best-of-N fit and inference timings.

use super::metrics::{evaluate, EvalReport};
use super::model::{fit_learner, fit_selection, ModelKind, ModelSpec, Selector, TrainedModel};
use super::timing::best_of;
use crate::error::Result;
use crate::features::NcaParams;
use crate::protocol::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepParams {
    pub models: Vec<ModelSpec>,
    pub selectors: Vec<Selector>,
    pub standardize: bool,
    pub train_repeats: usize,
    pub infer_repeats: usize,
}

impl SweepParams {
    /// KNN, tree and SVM defaults against all features, MRMR-k and NCA-k.
    pub fn standard(k: usize, nca: NcaParams) -> Self {
        SweepParams {
            models: [ModelKind::Knn, ModelKind::DecisionTree, ModelKind::GaussianSvm]
                .into_iter()
                .map(ModelSpec::default_for)
                .collect(),
            selectors: vec![Selector::None, Selector::mrmr(k), Selector::Nca(NcaParams { k, ..nca })],
            standardize: true,
            train_repeats: 3,
            infer_repeats: 15,
        }
    }
}

/// Reports in model-major order. `selection_time_s` is the selector's own
/// cost; train and inference times are the fastest of the repeats.
pub fn sweep(train: &Dataset, test: &Dataset, params: &SweepParams) -> Result<Vec<EvalReport>> {
    let selections = params
        .selectors
        .iter()
        .map(|s| fit_selection(train, s, params.standardize))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(params.models.len() * selections.len());
    for spec in &params.models {
        for (standardizer, ranking, selection_s) in &selections {
            let (learner, train_s) = best_of(params.train_repeats, || {
                Ok(fit_learner(train, standardizer, ranking.as_ref(), spec)?.0)
            })?;
            let model = TrainedModel::assemble(train, *spec, standardizer.clone(), ranking.clone(), learner);
            let (_, infer_s) = best_of(params.infer_repeats, || model.predict_all(test))?;
            let mut report = evaluate(&model, test)?.with_fit_times(*selection_s, train_s);
            report.infer_time_s = infer_s;
            report.infer_per_sample_s = infer_s / test.len() as f64;
            out.push(report);
        }
    }
    Ok(out)
}

/// One row per report: method, selector, accuracy and timings.
pub fn sweep_table_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("method,selector,accuracy,selection_s,train_s,infer_s,infer_per_sample_s\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.6},{:.4},{:.4},{:.4},{:.4e}\n",
            r.method, r.selector, r.accuracy, r.selection_time_s, r.train_time_s, r.infer_time_s, r.infer_per_sample_s
        ));
    }
    out
}
