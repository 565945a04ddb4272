//! Standardization and the two feature selectors (MRMR and diagonal NCA).

pub mod mi;
mod mrmr;
mod nca;
mod ranking;
mod standardize;

pub use mi::{feature_mutual_information, mutual_information, DEFAULT_BINS};
pub use mrmr::{mrmr_select, mrmr_select_default, DEFAULT_K};
pub use nca::{nca_select, rank_by_weight, NcaFit, NcaParams, NcaProblem};
pub use ranking::{FeatureRanking, SelectionMethod};
pub use standardize::{apply_standardizer, fit_standardizer, StandardizationStats};
