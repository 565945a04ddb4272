//! Labeled latency-group datasets, their construction from the simulator,
//! stratified splitting and CSV persistence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rayon::prelude::*;

use crate::chipsim::{new_chip, Catalog};
use crate::error::{Error, Result};
use crate::fsutil;
use crate::seed::{self, stream};
use crate::ClassTag;

/// Consecutive latencies per sample, each one a feature.
pub const GROUP_SIZE: usize = 100;

pub const DEFAULT_CHECKPOINTS: [u64; 7] = [0, 1_000, 5_000, 10_000, 15_000, 30_000, 50_000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleMeta {
    pub chip_seed: u64,
    pub addr: usize,
    pub checkpoint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub features: Vec<f64>,
    pub label: ClassTag,
    pub meta: SampleMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<FeatureVector>,
    class_names: BTreeMap<ClassTag, String>,
}

impl Dataset {
    /// All samples must share one arity; every label needs a class name
    /// (missing names default to `class<tag>`).
    pub fn new(
        samples: Vec<FeatureVector>,
        mut class_names: BTreeMap<ClassTag, String>,
    ) -> Result<Self> {
        if let Some(first) = samples.first() {
            let arity = first.features.len();
            if arity == 0 {
                return Err(Error::validation("samples have no features"));
            }
            if let Some(bad) = samples.iter().find(|s| s.features.len() != arity) {
                return Err(Error::Arity {
                    expected: arity,
                    got: bad.features.len(),
                });
            }
        }
        for s in &samples {
            class_names
                .entry(s.label)
                .or_insert_with(|| format!("class{}", s.label));
        }
        Ok(Dataset {
            samples,
            class_names,
        })
    }

    /// Dataset from bare (features, label) rows with zeroed provenance.
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<f64>, ClassTag)>,
    {
        let samples = rows
            .into_iter()
            .map(|(features, label)| FeatureVector {
                features,
                label,
                meta: SampleMeta {
                    chip_seed: 0,
                    addr: 0,
                    checkpoint: 0,
                },
            })
            .collect();
        Dataset::new(samples, BTreeMap::new())
    }

    pub fn samples(&self) -> &[FeatureVector] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.samples.first().map_or(0, |s| s.features.len())
    }

    pub fn class_names(&self) -> &BTreeMap<ClassTag, String> {
        &self.class_names
    }

    pub fn labels(&self) -> Vec<ClassTag> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Distinct labels present in the samples, ascending.
    pub fn classes(&self) -> Vec<ClassTag> {
        let mut tags: Vec<_> = self.samples.iter().map(|s| s.label).collect();
        tags.sort_unstable();
        tags.dedup();
        tags
    }

    pub fn class_counts(&self) -> BTreeMap<ClassTag, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.label).or_insert(0) += 1;
        }
        counts
    }

    /// Features as a samples × features matrix.
    pub fn matrix(&self) -> Array2<f64> {
        let (n, d) = (self.len(), self.arity());
        let mut m = Array2::zeros((n, d));
        for (mut row, s) in m.rows_mut().into_iter().zip(&self.samples) {
            for (dst, &v) in row.iter_mut().zip(&s.features) {
                *dst = v;
            }
        }
        m
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[feature]).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Same samples with features replaced by `f(features)`.
    pub fn map_features(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| FeatureVector {
                    features: f(&s.features),
                    label: s.label,
                    meta: s.meta,
                })
                .collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Keep only the listed feature columns, in the given order.
    pub fn select_features(&self, indices: &[usize]) -> Dataset {
        self.map_features(|f| indices.iter().map(|&i| f[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetParams {
    pub chips_per_class: usize,
    pub checkpoints: Vec<u64>,
    pub group: usize,
    pub locations_per_chip: usize,
    pub seed: u64,
}

impl Default for DatasetParams {
    fn default() -> Self {
        DatasetParams {
            chips_per_class: 3,
            checkpoints: DEFAULT_CHECKPOINTS.to_vec(),
            group: GROUP_SIZE,
            locations_per_chip: 12,
            seed: 1,
        }
    }
}

impl DatasetParams {
    pub fn expected_len(&self, n_classes: usize) -> usize {
        n_classes * self.chips_per_class * self.locations_per_chip * self.checkpoints.len()
    }
}

/// Chip seed for the `index`-th chip of class `tag` under root seed `root`.
pub fn chip_seed_for(root: u64, tag: ClassTag, index: usize) -> u64 {
    seed::derive(root, &[stream::CHIP_SEED, tag as u64, index as u64])
}

/// `count` distinct addresses drawn for one chip, in draw order.
pub fn random_locations(chip_seed: u64, num_locations: usize, count: usize) -> Result<Vec<usize>> {
    if count > num_locations {
        return Err(Error::validation(format!(
            "cannot draw {count} distinct locations from {num_locations}"
        )));
    }
    let mut rng = seed::rng(chip_seed, &[stream::LOCATIONS]);
    Ok(index::sample(&mut rng, num_locations, count).into_vec())
}

/// For every (class, chip, location, checkpoint): fast-forward the location to
/// the checkpoint wear and record `group` consecutive cycles as one sample.
/// A checkpoint already passed by the location's wear records without fast-forwarding.
pub fn build_dataset(catalog: &Catalog, params: &DatasetParams) -> Result<Dataset> {
    if catalog.is_empty() {
        return Err(Error::validation("empty catalog"));
    }
    if params.group == 0 {
        return Err(Error::validation("group must be >= 1"));
    }
    if params.locations_per_chip == 0 {
        return Err(Error::validation("locations_per_chip must be >= 1"));
    }
    if params.chips_per_class == 0 {
        return Err(Error::validation("chips_per_class must be >= 1"));
    }
    if params.checkpoints.is_empty() {
        return Err(Error::validation("no checkpoints"));
    }
    if params.checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::validation("checkpoints must be sorted ascending"));
    }

    let jobs: Vec<(usize, usize)> = (0..catalog.len())
        .flat_map(|c| (0..params.chips_per_class).map(move |k| (c, k)))
        .collect();
    let per_chip: Vec<Result<Vec<FeatureVector>>> = jobs
        .par_iter()
        .map(|&(c, k)| {
            let spec = &catalog.classes()[c];
            let chip_seed = chip_seed_for(params.seed, spec.class_tag, k);
            let mut chip = new_chip(spec, chip_seed);
            let addrs = random_locations(chip_seed, spec.num_locations, params.locations_per_chip)?;
            let mut out = Vec::with_capacity(addrs.len() * params.checkpoints.len());
            for &addr in &addrs {
                for &ckpt in &params.checkpoints {
                    let wear = chip.wear(addr)?;
                    chip.cycle_location(addr, ckpt.saturating_sub(wear))?;
                    let features = (0..params.group)
                        .map(|_| chip.latency_sample(addr, true))
                        .collect::<Result<Vec<_>>>()?;
                    out.push(FeatureVector {
                        features,
                        label: spec.class_tag,
                        meta: SampleMeta {
                            chip_seed,
                            addr,
                            checkpoint: ckpt,
                        },
                    });
                }
            }
            Ok(out)
        })
        .collect();

    let mut samples = Vec::with_capacity(params.expected_len(catalog.len()));
    for chunk in per_chip {
        samples.extend(chunk?);
    }
    let names = catalog
        .classes()
        .iter()
        .map(|c| (c.class_tag, c.label()))
        .collect();
    Dataset::new(samples, names)
}

/// Stratified, seeded train/test partition. Per class the train count is
/// `round(train_fraction * n)`, clamped so both sides keep at least one sample.
/// Both outputs preserve the input order.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation("train_fraction must lie in (0, 1)"));
    }
    let mut by_class: BTreeMap<ClassTag, Vec<usize>> = BTreeMap::new();
    for (i, s) in ds.samples().iter().enumerate() {
        by_class.entry(s.label).or_default().push(i);
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (tag, mut idx) in by_class {
        let n = idx.len();
        if n < 2 {
            return Err(Error::validation(format!(
                "class {tag} has {n} sample(s); need at least 2 to stratify"
            )));
        }
        let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let mut rng = seed::rng(seed, &[stream::SPLIT, tag as u64]);
        idx.shuffle(&mut rng);
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

fn feature_header(arity: usize) -> String {
    let mut h = String::from("class,chip_seed,addr,checkpoint");
    for i in 0..arity {
        write!(h, ",f{i:03}").unwrap();
    }
    h
}

/// CSV text of a dataset: `# class <tag> <name>` comment lines, the header
/// row, then one row per sample with six-decimal latencies.
pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = String::with_capacity(ds.len() * (ds.arity() * 14 + 40) + 4096);
    for (tag, name) in ds.class_names() {
        writeln!(out, "# class {tag} {name}").unwrap();
    }
    let arity = if ds.is_empty() { GROUP_SIZE } else { ds.arity() };
    out.push_str(&feature_header(arity));
    out.push('\n');
    for s in ds.samples() {
        write!(
            out,
            "{},{},{},{}",
            s.label, s.meta.chip_seed, s.meta.addr, s.meta.checkpoint
        )
        .unwrap();
        for v in &s.features {
            write!(out, ",{v:.6}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parse a dataset CSV, taking the feature count from the header.
pub fn dataset_from_csv(text: &str) -> Result<Dataset> {
    let header = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .ok_or_else(|| Error::parse(1, "missing header row"))?;
    let columns = header.split(',').count();
    if columns < 4 {
        return Err(Error::parse(1, "header lacks class,chip_seed,addr,checkpoint"));
    }
    dataset_from_csv_arity(text, columns - 4)
}

pub fn dataset_from_csv_arity(text: &str, arity: usize) -> Result<Dataset> {
    let mut names = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        let mut parts = rest.trim().splitn(3, ' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("class"), Some(tag), Some(name)) => {
                let tag = tag
                    .parse()
                    .map_err(|_| Error::parse(i as u64 + 1, format!("bad class tag {tag:?}")))?;
                names.insert(tag, name.to_string());
            }
            _ => {}
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::parse(0, e.to_string()))?
        .clone();
    let expected = feature_header(arity);
    let got = header.iter().collect::<Vec<_>>().join(",");
    if got != expected {
        return Err(Error::parse(
            header.position().map_or(1, |p| p.line()),
            format!(
                "header has {} columns, expected class,chip_seed,addr,checkpoint + {arity} features",
                header.len()
            ),
        ));
    }

    let mut samples = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            Error::parse(e.position().map_or(0, |p| p.line()), e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != arity + 4 {
            return Err(Error::parse(
                line,
                format!("expected {} columns, found {}", arity + 4, row.len()),
            ));
        }
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |what: &str| Error::parse(line, format!("bad {what} value"));
        let label = field(0).parse().map_err(|_| bad("class"))?;
        let chip_seed = field(1).parse().map_err(|_| bad("chip_seed"))?;
        let addr = field(2).parse().map_err(|_| bad("addr"))?;
        let checkpoint = field(3).parse().map_err(|_| bad("checkpoint"))?;
        let features = (4..arity + 4)
            .map(|i| field(i).parse::<f64>().map_err(|_| bad("feature")))
            .collect::<Result<Vec<_>>>()?;
        samples.push(FeatureVector {
            features,
            label,
            meta: SampleMeta {
                chip_seed,
                addr,
                checkpoint,
            },
        });
    }
    Dataset::new(samples, names)
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    fsutil::write_atomic(path, dataset_to_csv(ds).as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    dataset_from_csv(&fsutil::read_to_string(path)?)
}
