//! Data-collection procedures on top of the simulator.

mod dataset;
mod stats;
mod trace;

pub use dataset::{
    build_dataset, chip_seed_for, dataset_from_csv, dataset_from_csv_arity, dataset_to_csv,
    load_dataset, random_locations, save_dataset, split, Dataset, DatasetParams, FeatureVector,
    SampleMeta, DEFAULT_CHECKPOINTS, GROUP_SIZE,
};
pub use stats::{
    fresh_window_stats, latency_stats, stats_to_csv, StatsParams, WindowSide, WindowStats,
    DEFAULT_STAT_CHECKPOINTS,
};
pub use trace::{collect_trace, collect_trace_after, read_latency_column, LatencyTrace};
