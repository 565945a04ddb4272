//! Chip class catalog: one latency/degradation parameter record per chip type.
//!
//! The catalog is a CSV file with a header row naming every field. Lines
//! starting with `#` are comments. `step_cycles`/`step_factor` may be left
//! empty for classes without a one-time latency jump.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassTag;

const BUILTIN_CSV: &str = include_str!("../../catalog/builtin.csv");

pub const CATALOG_HEADER: [&str; 15] = [
    "class_tag",
    "manufacturer",
    "capacity_label",
    "technology",
    "op_kind",
    "num_locations",
    "base_latency_us",
    "drift_amplitude",
    "drift_exponent",
    "drift_ref_cycles",
    "noise_sigma",
    "chip_sigma",
    "loc_sigma",
    "step_cycles",
    "step_factor",
];

pub const MIN_LOCATIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Technology {
    NorFlash,
    Cbram,
    Rram,
}

impl Technology {
    /// The operation whose completion latency is measured for this technology.
    pub fn op_kind(self) -> OpKind {
        match self {
            Technology::NorFlash => OpKind::SectorErase,
            Technology::Cbram | Technology::Rram => OpKind::PageWrite,
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technology::NorFlash => "NOR_FLASH",
            Technology::Cbram => "CBRAM",
            Technology::Rram => "RRAM",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OpKind {
    SectorErase,
    PageWrite,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::SectorErase => "SECTOR_ERASE",
            OpKind::PageWrite => "PAGE_WRITE",
        })
    }
}

/// Latency model parameters for one chip class.
///
/// Noise-free latency at wear `w` is
/// `base_latency_us * (1 + drift_amplitude * (w / drift_ref_cycles)^drift_exponent) * step(w)`
/// where `step(w) = step_factor` once `w >= step_cycles` and 1 before.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipClassSpec {
    pub class_tag: ClassTag,
    pub manufacturer: String,
    pub capacity_label: String,
    pub technology: Technology,
    pub op_kind: OpKind,
    pub num_locations: usize,
    pub base_latency_us: f64,
    pub drift_amplitude: f64,
    pub drift_exponent: f64,
    pub drift_ref_cycles: u64,
    pub noise_sigma: f64,
    pub chip_sigma: f64,
    pub loc_sigma: f64,
    pub step_cycles: Option<u64>,
    pub step_factor: Option<f64>,
}

impl ChipClassSpec {
    /// `manufacturer-capacity`, used as the human-readable class name.
    pub fn label(&self) -> String {
        format!("{}-{}", self.manufacturer, self.capacity_label)
    }

    /// Multiplicative wear term `(1 + a (w/c_ref)^b) * step(w)`.
    pub fn wear_factor(&self, wear: u64) -> f64 {
        let x = wear as f64 / self.drift_ref_cycles as f64;
        let drift = 1.0 + self.drift_amplitude * x.powf(self.drift_exponent);
        match (self.step_cycles, self.step_factor) {
            (Some(at), Some(factor)) if wear >= at => drift * factor,
            _ => drift,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tag = self.class_tag;
        let fail = |what: &str| Err(Error::validation(format!("class {tag}: {what}")));
        if self.op_kind != self.technology.op_kind() {
            return fail(&format!(
                "{} chips are measured with {}, not {}",
                self.technology,
                self.technology.op_kind(),
                self.op_kind
            ));
        }
        if self.num_locations < MIN_LOCATIONS {
            return fail(&format!("num_locations must be >= {MIN_LOCATIONS}"));
        }
        if !(self.base_latency_us.is_finite() && self.base_latency_us > 0.0) {
            return fail("base_latency_us must be positive");
        }
        if !(self.drift_amplitude.is_finite() && self.drift_amplitude >= 0.0) {
            return fail("drift_amplitude must be non-negative");
        }
        if !(self.drift_exponent > 0.0 && self.drift_exponent <= 2.0) {
            return fail("drift_exponent must lie in (0, 2]");
        }
        if self.drift_ref_cycles == 0 {
            return fail("drift_ref_cycles must be positive");
        }
        for (name, s) in [
            ("noise_sigma", self.noise_sigma),
            ("chip_sigma", self.chip_sigma),
            ("loc_sigma", self.loc_sigma),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return fail(&format!("{name} must be non-negative"));
            }
        }
        match (self.step_cycles, self.step_factor) {
            (None, None) => {}
            (Some(c), Some(f)) => {
                if c == 0 {
                    return fail("step_cycles must be positive");
                }
                if !(f.is_finite() && f >= 1.0) {
                    return fail("step_factor must be >= 1");
                }
            }
            _ => return fail("step_cycles and step_factor must be given together"),
        }
        Ok(())
    }
}

/// An ordered, validated set of chip classes with unique tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    classes: Vec<ChipClassSpec>,
}

impl Catalog {
    pub fn new(classes: Vec<ChipClassSpec>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::validation("catalog is empty"));
        }
        let mut seen = BTreeSet::new();
        for c in &classes {
            c.validate()?;
            if !seen.insert(c.class_tag) {
                return Err(Error::validation(format!(
                    "duplicate class_tag {}",
                    c.class_tag
                )));
            }
        }
        Ok(Catalog { classes })
    }

    /// The nine default classes. All numeric parameters are synthetic
    /// calibration constants; only the manufacturer/capacity labels mirror real parts.
    pub fn builtin() -> Self {
        Self::from_csv_str(BUILTIN_CSV).expect("builtin catalog is valid")
    }

    pub fn builtin_csv() -> &'static str {
        BUILTIN_CSV
    }

    /// Load from a file path, or the builtin catalog for the literal `"builtin"`.
    pub fn load(path: &str) -> Result<Self> {
        if path == "builtin" {
            return Ok(Self::builtin());
        }
        let text = std::fs::read_to_string(Path::new(path)).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut classes = Vec::new();
        for row in reader.deserialize::<ChipClassSpec>() {
            let spec = row.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::parse(line, e.to_string())
            })?;
            classes.push(spec);
        }
        Self::new(classes)
    }

    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for c in &self.classes {
            writer.serialize(c).expect("in-memory csv write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf8")
    }

    pub fn classes(&self) -> &[ChipClassSpec] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn get(&self, tag: ClassTag) -> Option<&ChipClassSpec> {
        self.classes.iter().find(|c| c.class_tag == tag)
    }

    pub fn tags(&self) -> Vec<ClassTag> {
        self.classes.iter().map(|c| c.class_tag).collect()
    }
}

impl FromStr for Technology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "NOR_FLASH" => Ok(Technology::NorFlash),
            "CBRAM" => Ok(Technology::Cbram),
            "RRAM" => Ok(Technology::Rram),
            other => Err(Error::validation(format!("unknown technology {other:?}"))),
        }
    }
}
