use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ClassTag;

/// One latency per address covering a whole chip.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialLatencyMap {
    class_hint: Option<ClassTag>,
    latencies: Vec<f64>,
}

impl SpatialLatencyMap {
    pub fn new(class_hint: Option<ClassTag>, latencies: Vec<f64>) -> Result<Self> {
        if let Some(i) = latencies.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::validation(format!(
                "latency at address {i} must be positive and finite"
            )));
        }
        Ok(SpatialLatencyMap {
            class_hint,
            latencies,
        })
    }

    pub fn class_hint(&self) -> Option<ClassTag> {
        self.class_hint
    }

    pub fn latencies(&self) -> &[f64] {
        &self.latencies
    }

    pub fn len(&self) -> usize {
        self.latencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latencies.is_empty()
    }

    /// Two-column `addr,latency_us` CSV.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("addr,latency_us\n");
        for (addr, v) in self.latencies.iter().enumerate() {
            writeln!(out, "{addr},{v:.6}").unwrap();
        }
        out
    }

    /// Parse `addr,latency_us` rows. Addresses must run 0, 1, 2, ... in order.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut latencies = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| {
                Error::parse(e.position().map_or(0, |p| p.line()), e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line());
            if row.len() != 2 {
                return Err(Error::parse(line, "expected 2 columns: addr,latency_us"));
            }
            let addr: usize = row[0]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad address {:?}", &row[0])))?;
            if addr != latencies.len() {
                return Err(Error::parse(
                    line,
                    format!("expected address {}, found {addr}", latencies.len()),
                ));
            }
            let v: f64 = row[1]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad latency {:?}", &row[1])))?;
            latencies.push(v);
        }
        if latencies.is_empty() {
            return Err(Error::validation("map has no rows"));
        }
        Self::new(None, latencies)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let m = SpatialLatencyMap::new(None, vec![1.25, 2.5, 30000.01]).unwrap();
        let back = SpatialLatencyMap::from_csv_str(&m.to_csv_string()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_gaps_and_nonpositive() {
        assert!(SpatialLatencyMap::from_csv_str("addr,latency_us\n0,1.0\n2,1.0\n").is_err());
        assert!(SpatialLatencyMap::new(None, vec![1.0, 0.0]).is_err());
        assert!(SpatialLatencyMap::from_csv_str("addr,latency_us\n").is_err());
    }
}
