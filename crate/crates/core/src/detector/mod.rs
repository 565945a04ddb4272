//! End-user verdicts: manufacturer identification, recycled-chip detection
//! and used-location localization.

mod identify;
mod map;
mod recycled;
mod regions;
mod report;

pub use identify::identify_manufacturer;
pub use map::SpatialLatencyMap;
pub use recycled::{detect_recycled, median, FreshBaseline, RecycledThresholds, Verdict};
pub use regions::{locate_used_regions, UsedRegion, DEFAULT_FLAG_RATIO};
pub use report::{DetectionReport, Identification, RecycledCheck};
