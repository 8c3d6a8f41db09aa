use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluate::{AucPooling, PoolMode};
use crate::forest::{ClassifierMode, MaxFeatures};
use crate::summarize::{DecisionWindow, FeatureConfig};

use super::{AugmentMode, RunConfig};

/// Lists of values per run axis; the runs are their Cartesian product.
/// Fixed parameters (forest, feature learning, AUC pooling) come from
/// `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub features: Vec<FeatureConfig>,
    pub noise_reduction: Vec<bool>,
    pub classifiers: Vec<ClassifierMode>,
    pub windows: Vec<DecisionWindow>,
    pub pools: Vec<PoolMode>,
    pub random_projection: Vec<Option<u64>>,
    pub base: RunConfig,
}

impl GridSpec {
    /// A grid holding only `base`.
    pub fn single(base: RunConfig) -> Self {
        GridSpec {
            features: vec![base.feature],
            noise_reduction: vec![base.noise_reduction],
            classifiers: vec![base.classifier],
            windows: vec![base.window],
            pools: vec![base.pool],
            random_projection: vec![base.random_projection],
            base,
        }
    }

    /// All twelve feature types, noise reduction on and off, the multilabel
    /// classifier and `second`, every standard window and both pool modes.
    pub fn full(second: ClassifierMode) -> Self {
        GridSpec {
            features: FeatureConfig::ALL.to_vec(),
            noise_reduction: vec![false, true],
            classifiers: vec![ClassifierMode::Multilabel, second],
            windows: DecisionWindow::STANDARD.to_vec(),
            pools: vec![PoolMode::Mean, PoolMode::Max],
            random_projection: vec![None],
            base: RunConfig::default(),
        }
    }

    /// The full grid restricted to short decision windows (1 s and 5 s),
    /// for datasets of short clips.
    pub fn short_windows(second: ClassifierMode) -> Self {
        GridSpec {
            windows: vec![DecisionWindow::Seconds(1), DecisionWindow::Seconds(5)],
            ..GridSpec::full(second)
        }
    }

    /// The full grid with whole-clip decisions only, for datasets of long
    /// recordings.
    pub fn whole_clip(second: ClassifierMode) -> Self {
        GridSpec { windows: vec![DecisionWindow::Whole], ..GridSpec::full(second) }
    }

    pub fn len(&self) -> usize {
        self.features.len()
            * self.noise_reduction.len()
            * self.classifiers.len()
            * self.windows.len()
            * self.pools.len()
            * self.random_projection.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs in a fixed order: feature, noise reduction, classifier,
    /// window, pool, projection (last varies fastest). Runs sharing a
    /// feature type are adjacent so upstream cache entries stay hot.
    pub fn expand(&self) -> Vec<RunConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &feature in &self.features {
            for &noise_reduction in &self.noise_reduction {
                for &classifier in &self.classifiers {
                    for &window in &self.windows {
                        for &pool in &self.pools {
                            for &random_projection in &self.random_projection {
                                out.push(RunConfig {
                                    feature,
                                    noise_reduction,
                                    classifier,
                                    window,
                                    pool,
                                    random_projection,
                                    ..self.base.clone()
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Config("grid has no runs: every axis needs at least one value".into()));
        }
        for f in &self.features {
            f.validate()?;
        }
        self.base.forest.validate()
    }

    /// Sets every seed (feature learning, forest, projection) from one value.
    pub fn reseed(&mut self, seed: u64) {
        self.base.learning.seed = seed;
        self.base.forest.seed = seed;
        for rp in self.random_projection.iter_mut().flatten() {
            *rp = seed;
        }
    }
}

/// Contents of a configuration file. Paths are resolved against the file's
/// directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FileConfig {
    pub manifest: Option<PathBuf>,
    pub auxiliary: Option<PathBuf>,
    pub augment: Option<AugmentMode>,
    /// Number of folds to deal clips into when the manifest has none.
    pub folds: Option<usize>,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub grid: GridSpec,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            manifest: None,
            auxiliary: None,
            augment: None,
            folds: None,
            output: None,
            cache_dir: None,
            workers: None,
            grid: GridSpec::single(RunConfig::default()),
        }
    }
}

fn scalars(key: &str, v: &toml::Value) -> Result<Vec<String>> {
    let one = |v: &toml::Value| match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        _ => Err(Error::Config(format!("`{key}`: expected a scalar or a list of scalars"))),
    };
    match v {
        toml::Value::Array(items) => items.iter().map(one).collect(),
        other => Ok(vec![one(other)?]),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &toml::Value) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    scalars(key, v)?
        .iter()
        .map(|s| s.parse::<T>().map_err(|e| Error::Config(format!("`{key}`: {e}"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &toml::Value) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let mut all = parse_list::<T>(key, v)?;
    if all.len() != 1 {
        return Err(Error::Config(format!("`{key}` takes a single value")));
    }
    Ok(all.remove(0))
}

fn parse_switch(key: &str, s: &str) -> Result<bool> {
    match s {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected on/off, got `{s}`"))),
    }
}

fn parse_projection(key: &str, s: &str) -> Result<Option<u64>> {
    match s {
        "none" | "off" | "false" => Ok(None),
        _ => s.parse().map(Some).map_err(|_| Error::Config(format!("`{key}`: expected a seed or `none`, got `{s}`"))),
    }
}

/// Parses a flat configuration: one `key = value` per line, where grid
/// axes also accept a list, e.g. `window = [1, 5]`. `base` resolves
/// relative paths.
pub fn parse_config(text: &str, base: &Path) -> Result<FileConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut cfg = FileConfig::default();
    let path = |key: &str, v: &toml::Value| -> Result<PathBuf> { Ok(base.join(parse_one::<String>(key, v)?)) };
    for (key, v) in &table {
        let g = &mut cfg.grid;
        match key.as_str() {
            "manifest" => cfg.manifest = Some(path(key, v)?),
            "auxiliary" => cfg.auxiliary = Some(path(key, v)?),
            "output" => cfg.output = Some(path(key, v)?),
            "cache_dir" => cfg.cache_dir = Some(path(key, v)?),
            "augment" => cfg.augment = Some(parse_one(key, v)?),
            "folds" => cfg.folds = Some(parse_one(key, v)?),
            "workers" => cfg.workers = Some(parse_one(key, v)?),
            "feature" => {
                g.features = if scalars(key, v)? == ["all"] {
                    FeatureConfig::ALL.to_vec()
                } else {
                    parse_list(key, v)?
                }
            }
            "noise_reduction" => {
                g.noise_reduction = scalars(key, v)?.iter().map(|s| parse_switch(key, s)).collect::<Result<_>>()?
            }
            "classifier" => g.classifiers = parse_list(key, v)?,
            "window" => g.windows = parse_list(key, v)?,
            "pool" => g.pools = parse_list(key, v)?,
            "random_projection" => {
                g.random_projection = scalars(key, v)?.iter().map(|s| parse_projection(key, s)).collect::<Result<_>>()?
            }
            "k" => g.base.learning.k = parse_one(key, v)?,
            "sample_size" => g.base.learning.sample_size = parse_one(key, v)?,
            "epsilon" => g.base.learning.epsilon = parse_one(key, v)?,
            "seed" => {
                let seed = parse_one(key, v)?;
                g.base.learning.seed = seed;
                g.base.forest.seed = seed;
            }
            "learning_seed" => g.base.learning.seed = parse_one(key, v)?,
            "forest_seed" => g.base.forest.seed = parse_one(key, v)?,
            "n_trees" => g.base.forest.n_trees = parse_one(key, v)?,
            "max_features" => g.base.forest.max_features = parse_one::<MaxFeatures>(key, v)?,
            "min_samples_leaf" => g.base.forest.min_samples_leaf = parse_one(key, v)?,
            "bootstrap" => g.base.forest.bootstrap = parse_switch(key, &parse_one::<String>(key, v)?)?,
            "auc" => {
                g.base.auc = match parse_one::<String>(key, v)?.as_str() {
                    "micro" => AucPooling::Micro,
                    "macro" => AucPooling::Macro,
                    s => return Err(Error::Config(format!("`auc`: expected micro or macro, got `{s}`"))),
                }
            }
            _ => return Err(Error::Config(format!("unknown configuration key `{key}`"))),
        }
    }
    // keep the base run consistent with the first value of every axis
    let g = &mut cfg.grid;
    if let (Some(&f), Some(&n), Some(&c), Some(&w), Some(&p), Some(&r)) = (
        g.features.first(),
        g.noise_reduction.first(),
        g.classifiers.first(),
        g.windows.first(),
        g.pools.first(),
        g.random_projection.first(),
    ) {
        g.base = RunConfig { feature: f, noise_reduction: n, classifier: c, window: w, pool: p, random_projection: r, ..g.base.clone() };
    }
    cfg.grid.validate()?;
    Ok(cfg)
}

pub fn load_config_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}
