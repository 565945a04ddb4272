use std::fmt::Write as _;

use super::identify::identify_manufacturer;
use super::recycled::{detect_recycled, FreshBaseline, RecycledThresholds, Verdict};
use super::regions::UsedRegion;
use crate::classifiers::{ClassScores, TrainedModel};
use crate::error::Result;
use crate::ClassTag;

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub class_tag: ClassTag,
    pub label: String,
    pub scores: ClassScores,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecycledCheck {
    pub verdict: Verdict,
    pub elevation_ratio: f64,
}

/// Verdicts for one probe or one chip scan; absent parts were not requested.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionReport {
    pub identification: Option<Identification>,
    pub recycled: Option<RecycledCheck>,
    pub used_regions: Option<Vec<UsedRegion>>,
    pub flag_ratio: Option<f64>,
}

impl DetectionReport {
    /// Identify the probe's class, then judge wear against that class's baseline.
    pub fn for_probe(
        probe: &[f64],
        model: &TrainedModel,
        baseline: &FreshBaseline,
        thresholds: &RecycledThresholds,
    ) -> Result<Self> {
        let (class_tag, scores) = identify_manufacturer(probe, model)?;
        let (verdict, elevation_ratio) = detect_recycled(probe, class_tag, baseline, thresholds)?;
        Ok(DetectionReport {
            identification: Some(Identification {
                class_tag,
                label: model.class_names.get(&class_tag).cloned().unwrap_or_default(),
                scores,
            }),
            recycled: Some(RecycledCheck {
                verdict,
                elevation_ratio,
            }),
            ..Default::default()
        })
    }

    pub fn for_scan(regions: Vec<UsedRegion>, flag_ratio: f64) -> Self {
        DetectionReport {
            used_regions: Some(regions),
            flag_ratio: Some(flag_ratio),
            ..Default::default()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(id) = &self.identification {
            writeln!(out, "predicted class {} ({})", id.class_tag, id.label).unwrap();
            let scores: Vec<String> = id
                .scores
                .per_class
                .iter()
                .map(|(c, v)| format!("{c}:{v}"))
                .collect();
            writeln!(out, "{} scores {}", id.scores.kind, scores.join(" ")).unwrap();
        }
        if let Some(r) = &self.recycled {
            writeln!(out, "recycled verdict {} (elevation {:.4})", r.verdict, r.elevation_ratio).unwrap();
        }
        if let Some(regions) = &self.used_regions {
            if regions.is_empty() {
                out.push_str("no used regions\n");
            } else {
                writeln!(out, "{} used regions", regions.len()).unwrap();
                for r in regions {
                    writeln!(out, "  {}..{} peak {:.4}", r.start, r.end, r.peak_ratio).unwrap();
                }
            }
        }
        out
    }

    /// `field,value` rows, then a region table when a scan was run.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("field,value\n");
        if let Some(id) = &self.identification {
            writeln!(out, "predicted_class,{}", id.class_tag).unwrap();
            writeln!(out, "predicted_label,{}", id.label).unwrap();
            for (c, v) in &id.scores.per_class {
                writeln!(out, "score_{c},{v}").unwrap();
            }
        }
        if let Some(r) = &self.recycled {
            writeln!(out, "recycled_verdict,{}", r.verdict).unwrap();
            writeln!(out, "elevation_ratio,{:.6}", r.elevation_ratio).unwrap();
        }
        if let Some(f) = self.flag_ratio {
            writeln!(out, "flag_ratio,{f}").unwrap();
        }
        if let Some(regions) = &self.used_regions {
            writeln!(out, "used_regions,{}", regions.len()).unwrap();
            out.push_str("\nstart_addr,end_addr,peak_ratio\n");
            for r in regions {
                writeln!(out, "{},{},{:.6}", r.start, r.end, r.peak_ratio).unwrap();
            }
        }
        out
    }
}
