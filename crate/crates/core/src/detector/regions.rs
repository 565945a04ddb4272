use super::map::SpatialLatencyMap;
use super::recycled::median;
use crate::error::{Error, Result};

pub const DEFAULT_FLAG_RATIO: f64 = 1.5;

/// Flagged addresses `start..=end`, merged across gaps of at most one address.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsedRegion {
    pub start: usize,
    pub end: usize,
    /// Largest latency / map median inside the region.
    pub peak_ratio: f64,
}

/// Flag every address at or above `flag_ratio` times the map median and merge
/// flagged addresses separated by at most one unflagged address.
pub fn locate_used_regions(map: &SpatialLatencyMap, flag_ratio: f64) -> Result<Vec<UsedRegion>> {
    if !(flag_ratio.is_finite() && flag_ratio > 1.0) {
        return Err(Error::validation(format!("flag ratio must exceed 1, got {flag_ratio}")));
    }
    let lat = map.latencies();
    let base = median(lat).ok_or_else(|| Error::validation("latency map is empty"))?;
    let mut out: Vec<UsedRegion> = Vec::new();
    for (addr, &v) in lat.iter().enumerate() {
        let ratio = v / base;
        if ratio < flag_ratio {
            continue;
        }
        match out.last_mut() {
            Some(r) if addr - r.end <= 2 => {
                r.end = addr;
                r.peak_ratio = r.peak_ratio.max(ratio);
            }
            _ => out.push(UsedRegion {
                start: addr,
                end: addr,
                peak_ratio: ratio,
            }),
        }
    }
    Ok(out)
}
