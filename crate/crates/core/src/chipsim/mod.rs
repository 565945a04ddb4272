//! Seeded generative model of per-location operation latency versus
//! cumulative program/erase cycles.

mod catalog;
mod chip;

pub use catalog::{
    Catalog, ChipClassSpec, OpKind, Technology, CATALOG_HEADER, MIN_LOCATIONS,
};
pub use chip::{new_chip, quantize, ChipInstance, LATENCY_QUANTUM_US, USED_SPOT_CYCLES};

/// Load a catalog file, or the builtin one for the literal `"builtin"`.
pub fn load_catalog(path: &str) -> crate::Result<Catalog> {
    Catalog::load(path)
}
