use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMethod {
    Mrmr,
    Nca,
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMethod::Mrmr => "mrmr",
            SelectionMethod::Nca => "nca",
        })
    }
}

impl FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrmr" => Ok(SelectionMethod::Mrmr),
            "nca" => Ok(SelectionMethod::Nca),
            other => Err(Error::validation(format!("unknown selection method {other:?}"))),
        }
    }
}

/// Selected feature indices in rank order with their selection scores.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub method: SelectionMethod,
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl FeatureRanking {
    pub fn new(method: SelectionMethod, indices: Vec<usize>, scores: Vec<f64>) -> Result<Self> {
        if indices.len() != scores.len() {
            return Err(Error::validation("ranking indices and scores differ in length"));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("ranking contains duplicate indices"));
        }
        Ok(FeatureRanking {
            method,
            indices,
            scores,
        })
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    /// Check every index addresses a feature of an `arity`-wide vector.
    pub fn check_arity(&self, arity: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= arity) {
            Some(&i) => Err(Error::validation(format!(
                "ranking selects feature {i} but samples have {arity} features"
            ))),
            None => Ok(()),
        }
    }

    /// Three text lines: `ranking <method> <k>`, `indices ...`, `scores ...`.
    pub fn to_text(&self) -> String {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        let sc: Vec<String> = self.scores.iter().map(|s| format!("{s:.8e}")).collect();
        format!(
            "ranking {} {}\nindices {}\nscores {}\n",
            self.method,
            self.k(),
            idx.join(" "),
            sc.join(" ")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |key: &str, n: u64| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(n, format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(Error::parse(n, format!("expected `{key}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let head = next("ranking", 1)?;
        if head.len() != 2 {
            return Err(Error::parse(1, "expected `ranking <method> <k>`"));
        }
        let method = head[0].parse()?;
        let k: usize = head[1]
            .parse()
            .map_err(|_| Error::parse(1, "bad ranking size"))?;
        let indices = next("indices", 2)?
            .iter()
            .map(|t| t.parse().map_err(|_| Error::parse(2, format!("bad index {t:?}"))))
            .collect::<Result<Vec<usize>>>()?;
        let scores = next("scores", 3)?
            .iter()
            .map(|t| t.parse().map_err(|_| Error::parse(3, format!("bad score {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if indices.len() != k {
            return Err(Error::parse(2, format!("expected {k} indices")));
        }
        Self::new(method, indices, scores)
    }
}
