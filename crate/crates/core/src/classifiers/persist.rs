//! Self-describing text format for trained models.
//!
//! ```text
//! nvmprobe-model 1
//! kind knn
//! params k=5
//! arity 100
//! classes 9
//! class 0 Macronix-4Mb
//! ...
//! mean <arity reals>
//! stdev <arity reals>
//! ranking none | ranking <method> <k> / indices ... / scores ...
//! <learner section>
//! end
//! ```
//!
//! Reals are written with 9 significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::knn::KnnModel;
use super::model::{Learner, ModelKind, ModelSpec, TrainedModel};
use super::svm::{BinarySvm, SvmModel};
use super::tree::{TreeModel, TreeNode};
use crate::error::{Error, Result};
use crate::features::{FeatureRanking, StandardizationStats};
use crate::fsutil;
use crate::ClassTag;

const MAGIC: &str = "nvmprobe-model 1";

fn real(v: f64) -> String {
    format!("{v:.8e}")
}

fn reals(vs: &[f64]) -> String {
    vs.iter().map(|&v| real(v)).collect::<Vec<_>>().join(" ")
}

fn ints<T: ToString>(vs: &[T]) -> String {
    vs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

pub fn model_to_text(m: &TrainedModel) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "kind {}", m.kind()).unwrap();
    writeln!(out, "params {}", m.spec.params_text()).unwrap();
    writeln!(out, "arity {}", m.arity).unwrap();
    writeln!(out, "classes {}", m.class_names.len()).unwrap();
    for (tag, name) in &m.class_names {
        writeln!(out, "class {tag} {name}").unwrap();
    }
    writeln!(out, "mean {}", reals(&m.standardizer.mean)).unwrap();
    writeln!(out, "stdev {}", reals(&m.standardizer.stdev)).unwrap();
    match &m.selected_features {
        None => out.push_str("ranking none\n"),
        Some(r) => out.push_str(&r.to_text()),
    }
    match &m.learner {
        Learner::Knn(k) => {
            writeln!(out, "knn {} {} {}", k.k, k.x.nrows(), k.x.ncols()).unwrap();
            for (row, y) in k.x.rows().into_iter().zip(&k.y) {
                writeln!(out, "{y} {}", reals(row.as_slice().unwrap())).unwrap();
            }
        }
        Learner::Tree(t) => {
            writeln!(out, "tree {} {}", t.nodes.len(), ints(&t.classes)).unwrap();
            for n in &t.nodes {
                match n.split {
                    Some((f, thr, l, r)) => {
                        writeln!(out, "split {f} {} {l} {r} {}", real(thr), ints(&n.counts))
                            .unwrap()
                    }
                    None => writeln!(out, "leaf {}", ints(&n.counts)).unwrap(),
                }
            }
        }
        Learner::Svm(s) => {
            writeln!(
                out,
                "svm {} {} {} {}",
                real(s.gamma),
                real(s.c),
                s.machines.len(),
                ints(&s.classes)
            )
            .unwrap();
            for mach in &s.machines {
                writeln!(
                    out,
                    "machine {} {} {} {}",
                    mach.positive,
                    mach.negative,
                    real(mach.rho),
                    mach.coef.len()
                )
                .unwrap();
                for (a, sv) in mach.coef.iter().zip(&mach.support) {
                    writeln!(out, "{} {}", real(*a), reals(sv)).unwrap();
                }
            }
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: u64,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.it.next() {
            Some((i, l)) => {
                self.line = i as u64 + 1;
                Ok(l)
            }
            None => Err(Error::parse(self.line + 1, "unexpected end of model file")),
        }
    }

    /// Next line, which must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(toks.collect())
    }

    fn keyed_one<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let toks = self.keyed(key)?;
        self.expect_len(&toks, 1, "values")?;
        self.parse(toks[0])
    }

    fn keyed_all<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let toks = self.keyed(key)?;
        self.parse_all(&toks)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn parse<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("cannot parse {tok:?}")))
    }

    fn parse_all<T: std::str::FromStr>(&self, toks: &[&str]) -> Result<Vec<T>> {
        toks.iter().map(|t| self.parse(t)).collect()
    }

    fn expect_len<T>(&self, v: &[T], n: usize, what: &str) -> Result<()> {
        if v.len() != n {
            return Err(self.err(format!("expected {n} {what}, found {}", v.len())));
        }
        Ok(())
    }
}

pub fn model_from_text(text: &str) -> Result<TrainedModel> {
    let mut ls = Lines {
        it: text.lines().enumerate(),
        line: 0,
    };
    if ls.next()?.trim() != MAGIC {
        return Err(ls.err("not a model file"));
    }
    let kind: ModelKind = ls.keyed("kind")?.first().copied().unwrap_or("").parse()?;
    let params = ls.keyed("params")?.join(" ");
    let spec = ModelSpec::from_params_text(kind, &params)?;
    let arity: usize = ls.keyed_one("arity")?;
    let n_classes: usize = ls.keyed_one("classes")?;
    let mut class_names = BTreeMap::new();
    for _ in 0..n_classes {
        let l = ls.next()?;
        let mut parts = l.splitn(3, ' ');
        if parts.next() != Some("class") {
            return Err(ls.err("expected `class <tag> <name>`"));
        }
        let tag: ClassTag = ls.parse(parts.next().unwrap_or(""))?;
        class_names.insert(tag, parts.next().unwrap_or("").to_string());
    }
    let mean: Vec<f64> = ls.keyed_all("mean")?;
    ls.expect_len(&mean, arity, "means")?;
    let stdev: Vec<f64> = ls.keyed_all("stdev")?;
    ls.expect_len(&stdev, arity, "stdevs")?;

    let head = ls.next()?;
    let selected_features = if head.trim() == "ranking none" {
        None
    } else {
        let block = format!("{head}\n{}\n{}\n", ls.next()?, ls.next()?);
        let r = FeatureRanking::from_text(&block).map_err(|e| ls.err(e.to_string()))?;
        r.check_arity(arity)?;
        Some(r)
    };
    let width = selected_features.as_ref().map_or(arity, |r| r.k());

    let learner = match kind {
        ModelKind::Knn => {
            let h = ls.keyed("knn")?;
            ls.expect_len(&h, 3, "knn header fields")?;
            let (k, n, d): (usize, usize, usize) = (ls.parse(h[0])?, ls.parse(h[1])?, ls.parse(h[2])?);
            if d != width {
                return Err(ls.err("knn matrix width disagrees with feature selection"));
            }
            let mut x = Array2::zeros((n, d));
            let mut y = Vec::with_capacity(n);
            for i in 0..n {
                let toks: Vec<&str> = ls.next()?.split_whitespace().collect();
                ls.expect_len(&toks, d + 1, "knn row fields")?;
                y.push(ls.parse(toks[0])?);
                for (j, t) in toks[1..].iter().enumerate() {
                    x[[i, j]] = ls.parse(t)?;
                }
            }
            Learner::Knn(KnnModel::fit(x.view(), &y, k)?)
        }
        ModelKind::DecisionTree => {
            let h = ls.keyed("tree")?;
            if h.is_empty() {
                return Err(ls.err("missing node count"));
            }
            let n_nodes: usize = ls.parse(h[0])?;
            let classes: Vec<ClassTag> = ls.parse_all(&h[1..])?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                let toks: Vec<&str> = ls.next()?.split_whitespace().collect();
                let node = match toks.first() {
                    Some(&"leaf") => TreeNode {
                        split: None,
                        counts: ls.parse_all(&toks[1..])?,
                    },
                    Some(&"split") if toks.len() >= 5 => TreeNode {
                        split: Some((
                            ls.parse(toks[1])?,
                            ls.parse(toks[2])?,
                            ls.parse(toks[3])?,
                            ls.parse(toks[4])?,
                        )),
                        counts: ls.parse_all(&toks[5..])?,
                    },
                    _ => return Err(ls.err("expected `leaf` or `split` node")),
                };
                nodes.push(node);
            }
            let tree = TreeModel { classes, nodes };
            tree.validate(width)?;
            Learner::Tree(tree)
        }
        ModelKind::GaussianSvm => {
            let h = ls.keyed("svm")?;
            if h.len() < 3 {
                return Err(ls.err("svm header needs gamma, C and machine count"));
            }
            let gamma: f64 = ls.parse(h[0])?;
            let c: f64 = ls.parse(h[1])?;
            let n_machines: usize = ls.parse(h[2])?;
            let classes: Vec<ClassTag> = ls.parse_all(&h[3..])?;
            let mut machines = Vec::with_capacity(n_machines);
            for _ in 0..n_machines {
                let mh = ls.keyed("machine")?;
                ls.expect_len(&mh, 4, "machine header fields")?;
                let (positive, negative): (ClassTag, ClassTag) = (ls.parse(mh[0])?, ls.parse(mh[1])?);
                let rho: f64 = ls.parse(mh[2])?;
                let nsv: usize = ls.parse(mh[3])?;
                let mut coef = Vec::with_capacity(nsv);
                let mut support = Vec::with_capacity(nsv);
                for _ in 0..nsv {
                    let toks: Vec<&str> = ls.next()?.split_whitespace().collect();
                    let v: Vec<f64> = ls.parse_all(&toks)?;
                    ls.expect_len(&v, width + 1, "support vector fields")?;
                    coef.push(v[0]);
                    support.push(v[1..].to_vec());
                }
                machines.push(BinarySvm {
                    positive,
                    negative,
                    coef,
                    support,
                    rho,
                });
            }
            Learner::Svm(SvmModel {
                c,
                gamma,
                classes,
                machines,
            })
        }
    };
    if ls.next()?.trim() != "end" {
        return Err(ls.err("expected `end`"));
    }
    Ok(TrainedModel {
        spec,
        arity,
        standardizer: StandardizationStats { mean, stdev },
        selected_features,
        learner,
        class_names,
    })
}

pub fn save_model(m: &TrainedModel, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, model_to_text(m).as_bytes())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    model_from_text(&fsutil::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::model::{fit_pipeline, PipelineConfig, Selector};
    use crate::protocol::Dataset;

    fn blobs() -> Dataset {
        Dataset::from_rows((0..24).map(|i| {
            let c = (i % 3) as ClassTag;
            (
                vec![c as f64 + 0.1 * (i as f64).sin(), (i as f64).cos(), c as f64 * 3.0],
                c,
            )
        }))
        .unwrap()
    }

    #[test]
    fn every_kind_round_trips_predictions() {
        let ds = blobs();
        for kind in [ModelKind::Knn, ModelKind::DecisionTree, ModelKind::GaussianSvm] {
            for sel in [Selector::None, Selector::mrmr(2)] {
                let cfg = PipelineConfig::new(ModelSpec::default_for(kind)).with_selector(sel);
                let (m, _) = fit_pipeline(&ds, &cfg).unwrap();
                let text = model_to_text(&m);
                let back = model_from_text(&text).unwrap();
                assert_eq!(model_to_text(&back), text);
                for s in ds.samples() {
                    assert_eq!(back.predict_sample(s).unwrap(), m.predict_sample(s).unwrap());
                }
            }
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let (m, _) = fit_pipeline(&blobs(), &PipelineConfig::new(ModelSpec::Knn { k: 3 })).unwrap();
        let text = model_to_text(&m);
        let cut: String = text.lines().take(12).collect::<Vec<_>>().join("\n");
        assert!(matches!(model_from_text(&cut), Err(Error::Parse { .. })));
        assert!(model_from_text("hello\n").is_err());
    }
}
