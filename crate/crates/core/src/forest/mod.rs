//! Random forests over summary vectors in single-label, multilabel and
//! binary-relevance modes.

mod tree;

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binio::{check_version, write_atomic, LeReader, LeWriter};
use crate::dataset::LabelVocabulary;
use crate::error::{Error, Result};
use tree::{grow, Targets, Tree, TreeSettings};

const MODEL_MAGIC: &[u8; 4] = b"BSRF";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MaxFeatures {
    /// ⌈√D⌉
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, dim: usize) -> Result<usize> {
        let m = match self {
            MaxFeatures::Sqrt => (dim as f64).sqrt().ceil() as usize,
            MaxFeatures::All => dim,
            MaxFeatures::Count(n) => n,
        };
        if m == 0 || m > dim {
            return Err(Error::Config(format!("max_features {m} is outside 1..={dim}")));
        }
        Ok(m)
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::Sqrt => write!(f, "sqrt"),
            MaxFeatures::All => write!(f, "all"),
            MaxFeatures::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt" => Ok(MaxFeatures::Sqrt),
            "all" => Ok(MaxFeatures::All),
            n => n
                .parse()
                .map(MaxFeatures::Count)
                .map_err(|_| Error::Config(format!("bad max_features `{s}`"))),
        }
    }
}

impl TryFrom<String> for MaxFeatures {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MaxFeatures> for String {
    fn from(m: MaxFeatures) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_features: MaxFeatures::Sqrt,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ClassifierMode {
    SingleLabel,
    Multilabel,
    BinaryRelevance,
}

impl ClassifierMode {
    pub const ALL: [ClassifierMode; 3] =
        [ClassifierMode::SingleLabel, ClassifierMode::Multilabel, ClassifierMode::BinaryRelevance];

    fn code(self) -> u8 {
        match self {
            ClassifierMode::SingleLabel => 0,
            ClassifierMode::Multilabel => 1,
            ClassifierMode::BinaryRelevance => 2,
        }
    }
}

impl fmt::Display for ClassifierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            ClassifierMode::SingleLabel => "single-label",
            ClassifierMode::Multilabel => "multilabel",
            ClassifierMode::BinaryRelevance => "binary-relevance",
        })
    }
}

impl FromStr for ClassifierMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-label" => Ok(ClassifierMode::SingleLabel),
            "multilabel" => Ok(ClassifierMode::Multilabel),
            "binary-relevance" => Ok(ClassifierMode::BinaryRelevance),
            _ => Err(Error::Config(format!("unknown classifier mode `{s}`"))),
        }
    }
}

impl TryFrom<String> for ClassifierMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ClassifierMode> for String {
    fn from(m: ClassifierMode) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Forest {
    trees: Vec<Tree>,
    width: usize,
}

impl Forest {
    fn fit(x: ArrayView2<'_, f64>, targets: Targets<'_>, params: &ForestParams, stream_base: u64) -> Result<Self> {
        let settings = TreeSettings {
            max_features: params.max_features.resolve(x.ncols())?,
            min_samples_leaf: params.min_samples_leaf,
            bootstrap: params.bootstrap,
        };
        // each tree draws from its own ChaCha stream so parallel and serial
        // training agree bit for bit
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(stream_base + t as u64);
                grow(x, targets, &settings, &mut rng)
            })
            .collect();
        Ok(Forest { trees, width: targets.width() })
    }

    fn predict(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let scale = 1.0 / self.trees.len() as f64;
        let rows: Vec<Vec<f64>> = (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let xr = x.row(i).to_vec();
                let mut acc = vec![0.0; self.width];
                for tree in &self.trees {
                    for (o, v) in acc.iter_mut().zip(tree.leaf_for(&xr)) {
                        *o += v;
                    }
                }
                acc.iter().map(|v| v * scale).collect()
            })
            .collect();
        Array2::from_shape_vec((x.nrows(), self.width), rows.concat()).expect("rows have forest width")
    }
}

/// A fitted forest ensemble. Prediction width always equals the vocabulary
/// size.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub mode: ClassifierMode,
    pub vocabulary: LabelVocabulary,
    pub params: ForestParams,
    pub feature_dim: usize,
    forests: Vec<Forest>,
}

/// Trains a forest on `features` (N×D) against the `labels` indicator
/// matrix (N×L, columns in vocabulary order).
pub fn train(
    features: ArrayView2<'_, f64>,
    labels: ArrayView2<'_, bool>,
    vocabulary: &LabelVocabulary,
    mode: ClassifierMode,
    params: &ForestParams,
) -> Result<TrainedModel> {
    params.validate()?;
    let (n, d) = features.dim();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("forest training needs at least 2 instances, got {n}")));
    }
    if d == 0 {
        return Err(Error::Config("forest training needs at least one feature".into()));
    }
    if labels.nrows() != n {
        return Err(Error::Dimension { context: "forest labels (rows)", expected: n, got: labels.nrows() });
    }
    if labels.ncols() != vocabulary.len() || vocabulary.is_empty() {
        return Err(Error::Dimension {
            context: "forest labels (columns)",
            expected: vocabulary.len(),
            got: labels.ncols(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("forest features contain non-finite values".into()));
    }
    let forests = match mode {
        ClassifierMode::SingleLabel => {
            let mut class = Vec::with_capacity(n);
            for (i, row) in labels.outer_iter().enumerate() {
                let pos: Vec<usize> = row.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| j).collect();
                if pos.len() != 1 {
                    return Err(Error::Config(format!(
                        "single-label mode needs exactly one label per instance; row {i} has {}",
                        pos.len()
                    )));
                }
                class.push(pos[0]);
            }
            for (j, name) in vocabulary.names().iter().enumerate() {
                if !class.contains(&j) {
                    log::warn!("class `{name}` has no training instances; it keeps zero probability");
                }
            }
            let targets = Targets::Classes { class: &class, n_classes: vocabulary.len() };
            vec![Forest::fit(features, targets, params, 0)?]
        }
        ClassifierMode::Multilabel => vec![Forest::fit(features, Targets::Binary { y: labels }, params, 0)?],
        ClassifierMode::BinaryRelevance => (0..labels.ncols())
            .map(|j| {
                let col = labels.slice(ndarray::s![.., j..j + 1]);
                Forest::fit(features, Targets::Binary { y: col }, params, (j as u64) << 32)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(TrainedModel {
        mode,
        vocabulary: vocabulary.clone(),
        params: *params,
        feature_dim: d,
        forests,
    })
}

impl TrainedModel {
    pub fn n_forests(&self) -> usize {
        self.forests.len()
    }

    /// Per-label probabilities, N×L.
    pub fn probabilities(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.feature_dim {
            return Err(Error::Dimension {
                context: "forest prediction",
                expected: self.feature_dim,
                got: features.ncols(),
            });
        }
        match self.mode {
            ClassifierMode::SingleLabel | ClassifierMode::Multilabel => Ok(self.forests[0].predict(features)),
            ClassifierMode::BinaryRelevance => {
                let mut out = Array2::zeros((features.nrows(), self.forests.len()));
                for (j, f) in self.forests.iter().enumerate() {
                    out.column_mut(j).assign(&f.predict(features).column(0));
                }
                Ok(out)
            }
        }
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = LeWriter::new(w);
        w.bytes(MODEL_MAGIC)?;
        w.u32(MODEL_VERSION)?;
        w.u8(self.mode.code())?;
        w.u32(self.vocabulary.len() as u32)?;
        for name in self.vocabulary.names() {
            w.str(name)?;
        }
        w.u32(self.params.n_trees as u32)?;
        match self.params.max_features {
            MaxFeatures::Sqrt => {
                w.u8(0)?;
                w.u32(0)?;
            }
            MaxFeatures::All => {
                w.u8(1)?;
                w.u32(0)?;
            }
            MaxFeatures::Count(n) => {
                w.u8(2)?;
                w.u32(n as u32)?;
            }
        }
        w.u32(self.params.min_samples_leaf as u32)?;
        w.u8(self.params.bootstrap as u8)?;
        w.u64(self.params.seed)?;
        w.u32(self.feature_dim as u32)?;
        w.u32(self.forests.len() as u32)?;
        for f in &self.forests {
            w.u32(f.width as u32)?;
            w.u32(f.trees.len() as u32)?;
            for t in &f.trees {
                t.write_to(&mut w)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = LeReader::new(r);
        r.magic(MODEL_MAGIC)?;
        check_version(r.u32()?, MODEL_VERSION, "model")?;
        let mode = match r.u8()? {
            0 => ClassifierMode::SingleLabel,
            1 => ClassifierMode::Multilabel,
            2 => ClassifierMode::BinaryRelevance,
            m => return Err(Error::Format(format!("unknown classifier mode code {m}"))),
        };
        let n_labels = r.u32()? as usize;
        let names = (0..n_labels).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let vocabulary = LabelVocabulary::from_names(names);
        if vocabulary.len() != n_labels {
            return Err(Error::Format("model vocabulary has duplicate or unsorted names".into()));
        }
        let n_trees = r.u32()? as usize;
        let tag = r.u8()?;
        let count = r.u32()? as usize;
        let max_features = match tag {
            0 => MaxFeatures::Sqrt,
            1 => MaxFeatures::All,
            2 => MaxFeatures::Count(count),
            t => return Err(Error::Format(format!("unknown max_features tag {t}"))),
        };
        let min_samples_leaf = r.u32()? as usize;
        let bootstrap = r.u8()? != 0;
        let seed = r.u64()?;
        let params = ForestParams { n_trees, max_features, min_samples_leaf, bootstrap, seed };
        let feature_dim = r.u32()? as usize;
        let n_forests = r.u32()? as usize;
        let expected_forests = if mode == ClassifierMode::BinaryRelevance { n_labels } else { 1 };
        if n_forests != expected_forests {
            return Err(Error::Format(format!("expected {expected_forests} forest(s), found {n_forests}")));
        }
        let mut forests = Vec::with_capacity(n_forests);
        for _ in 0..n_forests {
            let width = r.u32()? as usize;
            let expected_width = if mode == ClassifierMode::BinaryRelevance { 1 } else { n_labels };
            if width != expected_width {
                return Err(Error::Format(format!("forest width {width}, expected {expected_width}")));
            }
            let count = r.u32()? as usize;
            let trees = (0..count)
                .map(|_| Tree::read_from(&mut r, width, feature_dim))
                .collect::<Result<Vec<_>>>()?;
            forests.push(Forest { trees, width });
        }
        r.expect_eof()?;
        Ok(TrainedModel { mode, vocabulary, params, feature_dim, forests })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::read(path)?.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowKey {
    pub clip_id: String,
    pub window_index: usize,
}

/// Probabilities per instance (row) and label (column).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub keys: Vec<RowKey>,
    pub vocabulary: LabelVocabulary,
    pub values: Array2<f64>,
}

impl PredictionMatrix {
    pub fn new(keys: Vec<RowKey>, vocabulary: LabelVocabulary, values: Array2<f64>) -> Result<Self> {
        if keys.len() != values.nrows() {
            return Err(Error::Dimension { context: "prediction rows", expected: keys.len(), got: values.nrows() });
        }
        if vocabulary.len() != values.ncols() {
            return Err(Error::Dimension {
                context: "prediction columns",
                expected: vocabulary.len(),
                got: values.ncols(),
            });
        }
        Ok(PredictionMatrix { keys, vocabulary, values })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// CSV with `clip_id,window_index` followed by one column per label.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["clip_id".to_string(), "window_index".to_string()];
        header.extend(self.vocabulary.names().iter().cloned());
        w.write_record(&header)?;
        for (key, row) in self.keys.iter().zip(self.values.outer_iter()) {
            let mut rec = vec![key.clip_id.clone(), key.window_index.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "clip_id" || &header[1] != "window_index" {
            return Err(Error::Format(format!("{}: not a prediction file", path.display())));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let vocabulary = LabelVocabulary::from_names(names.clone());
        if vocabulary.names() != names.as_slice() {
            return Err(Error::Format(format!("{}: label columns must be sorted and unique", path.display())));
        }
        let mut keys = Vec::new();
        let mut flat = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let parse_err = |msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
            let window_index = rec[1].parse().map_err(|_| parse_err(format!("bad window index `{}`", &rec[1])))?;
            keys.push(RowKey { clip_id: rec[0].to_string(), window_index });
            for v in rec.iter().skip(2) {
                flat.push(v.parse::<f64>().map_err(|_| parse_err(format!("bad probability `{v}`")))?);
            }
        }
        let values = Array2::from_shape_vec((keys.len(), vocabulary.len()), flat)
            .map_err(|e| Error::Format(e.to_string()))?;
        PredictionMatrix::new(keys, vocabulary, values)
    }
}

/// Predicts every row of `features`, keyed by `keys`.
pub fn predict_proba(model: &TrainedModel, features: ArrayView2<'_, f64>, keys: Vec<RowKey>) -> Result<PredictionMatrix> {
    let values = model.probabilities(features)?;
    PredictionMatrix::new(keys, model.vocabulary.clone(), values)
}
