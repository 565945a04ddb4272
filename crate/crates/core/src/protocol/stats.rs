use std::fmt;

use rayon::prelude::*;

use super::dataset::random_locations;
use crate::chipsim::{new_chip, Catalog, ChipInstance};
use crate::error::{Error, Result};
use crate::seed::{self, stream};
use crate::ClassTag;

pub const DEFAULT_STAT_CHECKPOINTS: [u64; 4] = [1_000, 6_000, 16_000, 36_000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowSide {
    Before,
    After,
}

impl fmt::Display for WindowSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowSide::Before => "BEFORE",
            WindowSide::After => "AFTER",
        })
    }
}

/// Summary of all latencies observed in one cycle window, pooled over chips
/// and locations. BEFORE covers cycles `(ckpt - span, ckpt]`, AFTER covers
/// `(ckpt, ckpt + span]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub class_tag: ClassTag,
    pub checkpoint: u64,
    pub side: WindowSide,
    pub mean: f64,
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl WindowStats {
    fn from_values(class_tag: ClassTag, checkpoint: u64, side: WindowSide, v: &[f64]) -> Self {
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let stdev = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        WindowStats {
            class_tag,
            checkpoint,
            side,
            // pooled mean can round a hair outside [min, max] for constant windows
            mean: mean.clamp(min, max),
            stdev,
            min,
            max,
            n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsParams {
    pub chips: usize,
    pub locations: usize,
    pub checkpoints: Vec<u64>,
    pub span: u64,
    pub seed: u64,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams {
            chips: 2,
            locations: 5,
            checkpoints: DEFAULT_STAT_CHECKPOINTS.to_vec(),
            span: 50,
            seed: 1,
        }
    }
}

fn record(chip: &mut ChipInstance, addr: usize, count: u64, out: &mut Vec<f64>) -> Result<()> {
    for _ in 0..count {
        out.push(chip.latency_sample(addr, true)?);
    }
    Ok(())
}

fn stats_chip_seed(root: u64, tag: ClassTag, chip: usize) -> u64 {
    seed::derive(root, &[stream::STATS, tag as u64, chip as u64])
}

/// BEFORE/AFTER window statistics around each checkpoint, for every class.
/// Windows of consecutive checkpoints must not overlap.
pub fn latency_stats(catalog: &Catalog, params: &StatsParams) -> Result<Vec<WindowStats>> {
    if params.span == 0 {
        return Err(Error::validation("span must be >= 1"));
    }
    if params.chips == 0 || params.locations == 0 {
        return Err(Error::validation("chips and locations must be >= 1"));
    }
    let span = params.span;
    let mut floor = 0;
    for &c in &params.checkpoints {
        if c < floor + span {
            return Err(Error::validation(format!(
                "checkpoint {c} leaves no room for a {span}-cycle BEFORE window"
            )));
        }
        floor = c + span;
    }

    let per_class: Vec<Result<Vec<WindowStats>>> = catalog
        .classes()
        .par_iter()
        .map(|spec| {
            let k = params.checkpoints.len();
            let mut before = vec![Vec::new(); k];
            let mut after = vec![Vec::new(); k];
            for c in 0..params.chips {
                let chip_seed = stats_chip_seed(params.seed, spec.class_tag, c);
                let mut chip = new_chip(spec, chip_seed);
                for addr in random_locations(chip_seed, spec.num_locations, params.locations)? {
                    for (i, &ckpt) in params.checkpoints.iter().enumerate() {
                        let wear = chip.wear(addr)?;
                        chip.cycle_location(addr, ckpt - span - wear)?;
                        record(&mut chip, addr, span, &mut before[i])?;
                        record(&mut chip, addr, span, &mut after[i])?;
                    }
                }
            }
            Ok(params
                .checkpoints
                .iter()
                .enumerate()
                .flat_map(|(i, &ckpt)| {
                    [
                        WindowStats::from_values(spec.class_tag, ckpt, WindowSide::Before, &before[i]),
                        WindowStats::from_values(spec.class_tag, ckpt, WindowSide::After, &after[i]),
                    ]
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for r in per_class {
        out.extend(r?);
    }
    Ok(out)
}

/// AFTER-window statistics of the first `span` cycles of fresh locations
/// (checkpoint 0), the reference for recycled-chip checks.
pub fn fresh_window_stats(catalog: &Catalog, params: &StatsParams) -> Result<Vec<WindowStats>> {
    if params.span == 0 || params.chips == 0 || params.locations == 0 {
        return Err(Error::validation("span, chips and locations must be >= 1"));
    }
    catalog
        .classes()
        .iter()
        .map(|spec| {
            let mut values = Vec::new();
            for c in 0..params.chips {
                let chip_seed = stats_chip_seed(params.seed, spec.class_tag, c);
                let mut chip = new_chip(spec, chip_seed);
                for addr in random_locations(chip_seed, spec.num_locations, params.locations)? {
                    record(&mut chip, addr, params.span, &mut values)?;
                }
            }
            Ok(WindowStats::from_values(spec.class_tag, 0, WindowSide::After, &values))
        })
        .collect()
}

pub fn stats_to_csv(stats: &[WindowStats]) -> String {
    let mut out = String::from("class,checkpoint,side,n,mean_us,stdev_us,min_us,max_us\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            s.class_tag, s.checkpoint, s.side, s.n, s.mean, s.stdev, s.min, s.max
        ));
    }
    out
}
