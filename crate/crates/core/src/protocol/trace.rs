use std::fmt::Write as _;

use crate::chipsim::{new_chip, ChipClassSpec};
use crate::error::{Error, Result};
use crate::ClassTag;

/// Per-cycle latencies of one location, cycle indices starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyTrace {
    pub class_tag: ClassTag,
    pub chip_seed: u64,
    pub addr: usize,
    pub samples: Vec<(u64, f64)>,
}

impl LatencyTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|&(_, v)| v)
    }

    /// Plot-ready `cycle,latency_us` CSV.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(16 + self.samples.len() * 20);
        out.push_str("cycle,latency_us\n");
        for &(cycle, v) in &self.samples {
            writeln!(out, "{cycle},{v:.2}").unwrap();
        }
        out
    }
}

/// Cycle a fresh location `n_cycles` times, recording every operation's latency.
pub fn collect_trace(
    spec: &ChipClassSpec,
    chip_seed: u64,
    addr: usize,
    n_cycles: u64,
) -> Result<LatencyTrace> {
    collect_trace_after(spec, chip_seed, addr, 0, n_cycles)
}

/// As [`collect_trace`], after silently wearing the location by `pre_cycles`.
/// Cycle indices continue from `pre_cycles + 1`.
pub fn collect_trace_after(
    spec: &ChipClassSpec,
    chip_seed: u64,
    addr: usize,
    pre_cycles: u64,
    n_cycles: u64,
) -> Result<LatencyTrace> {
    if n_cycles == 0 {
        return Err(Error::validation("n_cycles must be >= 1"));
    }
    let mut chip = new_chip(spec, chip_seed);
    chip.cycle_location(addr, pre_cycles)?;
    let mut samples = Vec::with_capacity(n_cycles as usize);
    for cycle in pre_cycles + 1..=pre_cycles + n_cycles {
        samples.push((cycle, chip.latency_sample(addr, true)?));
    }
    Ok(LatencyTrace {
        class_tag: spec.class_tag,
        chip_seed,
        addr,
        samples,
    })
}

/// Latencies from a probe CSV: the `latency_us` column if the header has
/// one, otherwise the only column.
pub fn read_latency_column(text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
    let col = match header.iter().position(|h| h == "latency_us") {
        Some(c) => c,
        None if header.len() == 1 => 0,
        None => return Err(Error::parse(1, "no latency_us column")),
    };
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        let v: f64 = row
            .get(col)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| Error::parse(line, "bad latency value"))?;
        out.push(v);
    }
    Ok(out)
}
