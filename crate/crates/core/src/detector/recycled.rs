use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::chipsim::Catalog;
use crate::error::{Error, Result};
use crate::protocol::WindowStats;
use crate::ClassTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Fresh,
    Indeterminate,
    Used,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Fresh => "FRESH",
            Verdict::Indeterminate => "INDETERMINATE",
            Verdict::Used => "USED",
        })
    }
}

impl FromStr for Verdict {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FRESH" => Ok(Verdict::Fresh),
            "INDETERMINATE" => Ok(Verdict::Indeterminate),
            "USED" => Ok(Verdict::Used),
            _ => Err(Error::validation(format!("unknown verdict {s:?}"))),
        }
    }
}

/// Ratio bands: FRESH at or below `fresh_max`, USED at or above `used_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecycledThresholds {
    pub fresh_max: f64,
    pub used_min: f64,
}

impl Default for RecycledThresholds {
    fn default() -> Self {
        RecycledThresholds {
            fresh_max: 1.1,
            used_min: 1.3,
        }
    }
}

impl RecycledThresholds {
    pub fn new(fresh_max: f64, used_min: f64) -> Result<Self> {
        if !(fresh_max.is_finite() && used_min.is_finite() && 0.0 < fresh_max && fresh_max <= used_min) {
            return Err(Error::validation(format!(
                "need 0 < fresh_max <= used_min, got {fresh_max} and {used_min}"
            )));
        }
        Ok(RecycledThresholds { fresh_max, used_min })
    }

    pub fn classify(&self, ratio: f64) -> Verdict {
        if ratio >= self.used_min {
            Verdict::Used
        } else if ratio <= self.fresh_max {
            Verdict::Fresh
        } else {
            Verdict::Indeterminate
        }
    }
}

/// Fresh-location latency mean and stdev per class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FreshBaseline {
    per_class: BTreeMap<ClassTag, (f64, f64)>,
}

impl FreshBaseline {
    pub fn new(per_class: BTreeMap<ClassTag, (f64, f64)>) -> Result<Self> {
        if let Some((c, _)) = per_class.iter().find(|(_, (m, s))| !(m.is_finite() && *m > 0.0 && s.is_finite())) {
            return Err(Error::validation(format!("fresh baseline for class {c} is not a positive mean")));
        }
        Ok(FreshBaseline { per_class })
    }

    /// From measured windows (typically `fresh_window_stats`).
    pub fn from_window_stats(stats: &[WindowStats]) -> Result<Self> {
        Self::new(stats.iter().map(|w| (w.class_tag, (w.mean, w.stdev))).collect())
    }

    /// Closed form from the catalog: the lognormal noise mean
    /// `base * exp(sigma^2 / 2)`, with chip and location spread folded into the stdev.
    pub fn from_catalog(catalog: &Catalog) -> Self {
        let per_class = catalog
            .classes()
            .iter()
            .map(|s| {
                let mean = s.base_latency_us * (s.noise_sigma.powi(2) / 2.0).exp();
                let rel = (s.noise_sigma.powi(2) + s.chip_sigma.powi(2) + s.loc_sigma.powi(2)).sqrt();
                (s.class_tag, (mean, mean * rel))
            })
            .collect();
        FreshBaseline { per_class }
    }

    pub fn get(&self, class: ClassTag) -> Option<(f64, f64)> {
        self.per_class.get(&class).copied()
    }

    pub fn classes(&self) -> Vec<ClassTag> {
        self.per_class.keys().copied().collect()
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Elevation of the probe median over the class's fresh mean, and its verdict.
pub fn detect_recycled(
    probe: &[f64],
    class: ClassTag,
    baseline: &FreshBaseline,
    thresholds: &RecycledThresholds,
) -> Result<(Verdict, f64)> {
    let (fresh_mean, _) = baseline
        .get(class)
        .ok_or_else(|| Error::validation(format!("no fresh baseline for class {class}")))?;
    if probe.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::validation("probe latencies must be positive and finite"));
    }
    let m = median(probe).ok_or_else(|| Error::validation("probe is empty"))?;
    let ratio = m / fresh_mean;
    Ok((thresholds.classify(ratio), ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline() -> FreshBaseline {
        FreshBaseline::new([(3, (10.0, 0.5))].into_iter().collect()).unwrap()
    }

    #[test]
    fn bands() {
        let t = RecycledThresholds::default();
        let b = baseline();
        assert_eq!(detect_recycled(&[10.0; 5], 3, &b, &t).unwrap(), (Verdict::Fresh, 1.0));
        assert_eq!(detect_recycled(&[12.0; 5], 3, &b, &t).unwrap().0, Verdict::Indeterminate);
        assert_eq!(detect_recycled(&[11.0; 5], 3, &b, &t).unwrap().0, Verdict::Fresh);
        assert_eq!(detect_recycled(&[13.0; 5], 3, &b, &t).unwrap().0, Verdict::Used);
        assert!(detect_recycled(&[10.0], 4, &b, &t).is_err());
        assert!(detect_recycled(&[], 3, &b, &t).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn catalog_baseline_covers_every_class() {
        let cat = Catalog::builtin();
        assert_eq!(FreshBaseline::from_catalog(&cat).classes(), cat.tags());
    }
}
