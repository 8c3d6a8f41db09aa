//! End-to-end runs: decode, spectral features, optional per-fold feature
//! learning, windowed summaries, forest training, pooling and evaluation,
//! with a content-addressed cache and an audit log of consumed clips.

pub mod audit;
pub mod cache;
mod config;
mod export;

pub use audit::{AuditLog, AuditRecord, AuditStage, Leak};
pub use cache::{digest_hex, Cache, CacheStats};
pub use config::{load_config_file, parse_config, FileConfig, GridSpec};
pub use export::{export_bases, unwhitened_patch, ExportedBase};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{decode_audio, union_manifests, LabelVocabulary, Labelling, Manifest, ManifestEntry, STANDARD_SAMPLE_RATE};
use crate::encode::{encode, encode_two_layer, RandomProjection};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_run, AucPooling, EvalOptions, EvalReport, FoldPredictions, PoolMode};
use crate::featlearn::{learn_two_layer, skmeans_learn, Codebook, SkmParams, TwoLayerModel, TwoLayerParams, DEFAULT_EPSILON};
use crate::forest::{predict_proba, train, ClassifierMode, ForestParams, PredictionMatrix, RowKey, TrainedModel};
use crate::series::FeatureSeries;
use crate::spectral::{mel_spectrogram, mfcc_with_deltas, noise_reduce, MelSpectrogram};
use crate::summarize::{summarize_clip, DecisionWindow, FeatureConfig, FeatureKind, SummaryVector};

/// Bumped whenever a stage's output for the same inputs changes.
const STAGE_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearningParams {
    pub k: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams { k: 500, sample_size: 32_768, seed: 0, epsilon: DEFAULT_EPSILON }
    }
}

impl LearningParams {
    pub fn skm(&self, frames_per_patch: usize) -> SkmParams {
        SkmParams {
            k: self.k,
            frames_per_patch,
            sample_size: self.sample_size,
            seed: self.seed,
            epsilon: self.epsilon,
            whiten: true,
        }
    }
}

/// One point of the configuration grid plus the fixed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub feature: FeatureConfig,
    pub noise_reduction: bool,
    pub window: DecisionWindow,
    pub pool: PoolMode,
    pub classifier: ClassifierMode,
    /// Seed of the 200-column random projection, if used.
    pub random_projection: Option<u64>,
    pub forest: ForestParams,
    pub learning: LearningParams,
    pub auc: AucPooling,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            feature: FeatureConfig::ALL[0],
            noise_reduction: false,
            window: DecisionWindow::Whole,
            pool: PoolMode::Mean,
            classifier: ClassifierMode::Multilabel,
            random_projection: None,
            forest: ForestParams::default(),
            learning: LearningParams::default(),
            auc: AucPooling::Micro,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.feature.validate()?;
        self.forest.validate()?;
        if self.feature.is_learned() && self.learning.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    /// Every grid axis and the seeds, as strings.
    pub fn fingerprint(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("feature".into(), self.feature.label());
        m.insert("noise_reduction".into(), if self.noise_reduction { "on" } else { "off" }.into());
        m.insert("window".into(), self.window.to_string());
        m.insert("pool".into(), self.pool.to_string());
        m.insert("classifier".into(), self.classifier.to_string());
        m.insert(
            "random_projection".into(),
            self.random_projection.map_or("none".into(), |s| s.to_string()),
        );
        m.insert("k".into(), self.learning.k.to_string());
        m.insert("learning_seed".into(), self.learning.seed.to_string());
        m.insert("forest_seed".into(), self.forest.seed.to_string());
        m.insert("n_trees".into(), self.forest.n_trees.to_string());
        m
    }

    pub fn run_id(&self) -> String {
        self.fingerprint().iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AugmentMode {
    /// Auxiliary audio joins only the feature-learning stream.
    FeaturesOnly,
    /// Auxiliary audio joins feature learning and classifier training.
    FeaturesAndTraining,
    /// Train on the auxiliary data, test on the primary folds.
    CrossCondition,
}

impl fmt::Display for AugmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            AugmentMode::FeaturesOnly => "features-only",
            AugmentMode::FeaturesAndTraining => "features-and-training",
            AugmentMode::CrossCondition => "cross-condition",
        })
    }
}

impl FromStr for AugmentMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "features-only" => Ok(AugmentMode::FeaturesOnly),
            "features-and-training" => Ok(AugmentMode::FeaturesAndTraining),
            "cross-condition" => Ok(AugmentMode::CrossCondition),
            _ => Err(Error::Config(format!("unknown augmentation mode `{s}`"))),
        }
    }
}

impl TryFrom<String> for AugmentMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AugmentMode> for String {
    fn from(m: AugmentMode) -> String {
        m.to_string()
    }
}

/// A primary manifest with crossvalidation folds, optionally paired with
/// auxiliary data.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub primary: Manifest,
    auxiliary: Vec<ManifestEntry>,
    pub augment: Option<AugmentMode>,
}

impl Dataset {
    pub fn new(primary: Manifest) -> Result<Self> {
        if primary.is_empty() {
            return Err(Error::Empty(format!("manifest `{}` has no clips", primary.name)));
        }
        if primary.fold_count().is_none() {
            return Err(Error::Config(format!(
                "manifest `{}` needs a fold for every clip; assign folds first",
                primary.name
            )));
        }
        Ok(Dataset { primary, auxiliary: Vec::new(), augment: None })
    }

    /// Auxiliary clip ids that collide with primary ones are qualified with
    /// the auxiliary manifest name.
    pub fn with_auxiliary(primary: Manifest, auxiliary: &Manifest, mode: AugmentMode) -> Result<Self> {
        let mut d = Dataset::new(primary)?;
        if auxiliary.is_empty() {
            return Err(Error::Empty(format!("auxiliary manifest `{}` has no clips", auxiliary.name)));
        }
        if mode == AugmentMode::CrossCondition
            && d.primary.vocabulary().intersection_len(&auxiliary.vocabulary()) == 0
        {
            return Err(Error::Config(format!(
                "manifests `{}` and `{}` share no labels",
                d.primary.name, auxiliary.name
            )));
        }
        let union = union_manifests(&d.primary, auxiliary);
        d.auxiliary = union.entries()[d.primary.len()..].to_vec();
        d.augment = Some(mode);
        Ok(d)
    }

    pub fn auxiliary(&self) -> &[ManifestEntry] {
        &self.auxiliary
    }

    pub fn fold_count(&self) -> usize {
        self.primary.fold_count().expect("checked at construction")
    }

    /// Label vocabulary of every manifest involved.
    pub fn vocabulary(&self) -> LabelVocabulary {
        let aux = LabelVocabulary::from_names(self.auxiliary.iter().flat_map(|e| e.labels.iter().cloned()));
        self.primary.vocabulary().union(&aux)
    }

    /// (feature-learning, training, test) clips of one fold.
    pub fn fold_split(&self, fold: usize) -> (Vec<&ManifestEntry>, Vec<&ManifestEntry>, Vec<&ManifestEntry>) {
        let test: Vec<&ManifestEntry> = self.primary.fold_members(fold).collect();
        let rest: Vec<&ManifestEntry> = self.primary.outside_fold(fold).collect();
        let aux = self.auxiliary.iter();
        match self.augment {
            None => (rest.clone(), rest, test),
            Some(AugmentMode::FeaturesOnly) => (rest.iter().copied().chain(aux).collect(), rest, test),
            Some(AugmentMode::FeaturesAndTraining) => {
                let both: Vec<&ManifestEntry> = rest.into_iter().chain(aux).collect();
                (both.clone(), both, test)
            }
            Some(AugmentMode::CrossCondition) => {
                let a: Vec<&ManifestEntry> = aux.collect();
                (a.clone(), a, test)
            }
        }
    }
}

/// A learned single- or two-layer feature model.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnedModel {
    Single(Codebook),
    TwoLayer(TwoLayerModel),
}

impl LearnedModel {
    pub fn encode(&self, series: &FeatureSeries) -> Result<FeatureSeries> {
        match self {
            LearnedModel::Single(cb) => encode(cb, series),
            LearnedModel::TwoLayer(m) => encode_two_layer(m, series),
        }
    }

    /// Fewest frames a clip needs, if the model cannot pad.
    pub fn min_frames(&self) -> Option<usize> {
        match self {
            LearnedModel::Single(_) => None,
            LearnedModel::TwoLayer(m) => Some(m.min_frames()),
        }
    }

    pub fn first_layer(&self) -> &Codebook {
        match self {
            LearnedModel::Single(cb) => cb,
            LearnedModel::TwoLayer(m) => &m.layer1,
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        match self {
            LearnedModel::Single(cb) => cb.write_to(&mut buf)?,
            LearnedModel::TwoLayer(m) => m.write_to(&mut buf)?,
        }
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut magic = [0u8; 4];
        (&bytes[..]).read_exact(&mut magic).map_err(|_| Error::Format("model file too short".into()))?;
        if &magic == b"BSTL" {
            Ok(LearnedModel::TwoLayer(TwoLayerModel::read_from(bytes)?))
        } else {
            Ok(LearnedModel::Single(Codebook::read_from(bytes)?))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::binio::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Summary rows of a set of clips, plus the clips that were too short for
/// the feature type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Extracted {
    pub rows: Vec<SummaryVector>,
    pub excluded: Vec<String>,
}

impl Extracted {
    pub fn matrix(&self) -> Array2<f64> {
        let d = self.rows.first().map_or(0, |r| r.values.len());
        let mut m = Array2::zeros((self.rows.len(), d));
        for (mut out, r) in m.axis_iter_mut(Axis(0)).zip(&self.rows) {
            out.assign(&r.values);
        }
        m
    }

    pub fn keys(&self) -> Vec<RowKey> {
        self.rows
            .iter()
            .map(|r| RowKey { clip_id: r.clip_id.clone(), window_index: r.window_index })
            .collect()
    }

    pub fn clip_ids(&self) -> BTreeSet<String> {
        self.rows.iter().map(|r| r.clip_id.clone()).collect()
    }
}

/// Results of a grid: one report per successful run, and the error of each
/// failed one.
#[derive(Debug, Default)]
pub struct GridOutcome {
    pub reports: Vec<EvalReport>,
    pub failures: Vec<(BTreeMap<String, String>, String)>,
}

/// Runs experiments against a shared cache and audit log.
#[derive(Debug)]
pub struct Pipeline {
    pub cache: Cache,
    pub audit: AuditLog,
    pool: Option<rayon::ThreadPool>,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::new(Cache::in_memory())
    }
}

impl Pipeline {
    pub fn new(cache: Cache) -> Self {
        Pipeline { cache, audit: AuditLog::new(), pool: None }
    }

    /// Limits clip-level and tree-level parallelism to `workers` threads.
    pub fn with_workers(mut self, workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        self.pool = Some(pool);
        Ok(self)
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    /// Mel spectrogram of a clip, optionally noise-reduced.
    pub fn mel_series(&self, entry: &ManifestEntry, noise_reduction: bool) -> Result<FeatureSeries> {
        let digest = self.cache.file_digest(&entry.audio_path).map_err(|e| e.at_stage("decode", &entry.clip_id))?;
        let key = digest_hex(&["mel", STAGE_VERSION, &digest, &noise_reduction.to_string()]);
        self.cache.series_or(&key, || {
            let clip = decode_audio(&entry.audio_path, STANDARD_SAMPLE_RATE).map_err(|e| e.at_stage("decode", &entry.clip_id))?;
            let spec = mel_spectrogram(&clip).map_err(|e| e.at_stage("spectral", &entry.clip_id))?;
            Ok(if noise_reduction { noise_reduce(&spec) } else { spec }.to_series())
        })
    }

    /// The per-frame input series for `feature`: MFCCs for MFCC
    /// configurations, the mel spectrogram otherwise.
    pub fn base_series(&self, entry: &ManifestEntry, feature: FeatureConfig, noise_reduction: bool) -> Result<FeatureSeries> {
        let mel = self.mel_series(entry, noise_reduction)?;
        if feature.kind != FeatureKind::Mfcc {
            return Ok(mel);
        }
        let digest = self.cache.file_digest(&entry.audio_path)?;
        let key = digest_hex(&["mfcc", STAGE_VERSION, &digest, &noise_reduction.to_string()]);
        self.cache.series_or(&key, || {
            let spec = MelSpectrogram::from_series(&mel, STANDARD_SAMPLE_RATE)
                .map_err(|e| e.at_stage("spectral", &entry.clip_id))?;
            Ok(mfcc_with_deltas(&spec))
        })
    }

    fn model_key(&self, feature: FeatureConfig, noise_reduction: bool, learning: &LearningParams, clips: &[&ManifestEntry]) -> Result<String> {
        let digests = clips
            .iter()
            .map(|e| self.cache.file_digest(&e.audio_path))
            .collect::<Result<Vec<_>>>()?;
        // the stream order is part of the result, so keep it as given
        let joined = digests.join(",");
        let kind = match feature.kind {
            FeatureKind::Learned { frames } => format!("kfl{frames}"),
            FeatureKind::TwoLayer => "kfl4pl8kfl4".into(),
            _ => return Err(Error::Config(format!("`{feature}` does not use feature learning"))),
        };
        Ok(digest_hex(&[
            "model",
            STAGE_VERSION,
            &kind,
            &noise_reduction.to_string(),
            &learning.k.to_string(),
            &learning.sample_size.to_string(),
            &learning.seed.to_string(),
            &learning.epsilon.to_bits().to_string(),
            &joined,
        ]))
    }

    /// Learns the feature model for `feature` from the mel spectrograms of
    /// `clips`, in the order given.
    pub fn learn_features(
        &self,
        feature: FeatureConfig,
        noise_reduction: bool,
        learning: &LearningParams,
        clips: &[&ManifestEntry],
    ) -> Result<(String, LearnedModel)> {
        let key = self.model_key(feature, noise_reduction, learning, clips)?;
        let bytes = self.cache.bytes_or(&key, || {
            let series = self.install(|| {
                clips
                    .par_iter()
                    .map(|e| self.mel_series(e, noise_reduction))
                    .collect::<Result<Vec<_>>>()
            })?;
            let model = match feature.kind {
                FeatureKind::Learned { frames } => {
                    LearnedModel::Single(skmeans_learn(&series, &learning.skm(frames), 1).map_err(|e| e.at_stage("featlearn", "*"))?)
                }
                _ => LearnedModel::TwoLayer(
                    learn_two_layer(&series, &TwoLayerParams::from_base(&learning.skm(4)))
                        .map_err(|e| e.at_stage("featlearn", "*"))?,
                ),
            };
            model.to_bytes()
        })?;
        Ok((key, LearnedModel::from_bytes(&bytes)?))
    }

    /// Per-frame features of one clip, encoded through `model` when given.
    /// `Ok(None)` means the clip is too short for the model.
    fn clip_features(
        &self,
        entry: &ManifestEntry,
        feature: FeatureConfig,
        noise_reduction: bool,
        model: Option<(&str, &LearnedModel)>,
    ) -> Result<Option<FeatureSeries>> {
        let base = self.base_series(entry, feature, noise_reduction)?;
        let Some((model_key, model)) = model else { return Ok(Some(base)) };
        if model.min_frames().is_some_and(|m| base.frames() < m) {
            return Ok(None);
        }
        let digest = self.cache.file_digest(&entry.audio_path)?;
        let key = digest_hex(&["encoded", STAGE_VERSION, model_key, &digest]);
        let compute = || model.encode(&base).map_err(|e| e.at_stage("encode", &entry.clip_id));
        // encoded series are large; keep them only in a disk cache
        if self.cache.dir().is_some() {
            self.cache.series_or(&key, compute).map(Some)
        } else {
            compute().map(|s| Some(s.quantized()))
        }
    }

    /// Windowed summary vectors of `clips`.
    pub fn extract(
        &self,
        clips: &[&ManifestEntry],
        feature: FeatureConfig,
        noise_reduction: bool,
        window: DecisionWindow,
        model: Option<(&str, &LearnedModel)>,
    ) -> Result<Extracted> {
        let per_clip = self.install(|| {
            clips
                .par_iter()
                .map(|e| {
                    let Some(series) = self.clip_features(e, feature, noise_reduction, model)? else {
                        return Ok(None);
                    };
                    summarize_clip(&e.clip_id, &series, feature, window)
                        .map(Some)
                        .map_err(|err| err.at_stage("summarize", &e.clip_id))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let mut out = Extracted::default();
        for (e, rows) in clips.iter().zip(per_clip) {
            match rows {
                Some(r) => out.rows.extend(r),
                None => out.excluded.push(e.clip_id.clone()),
            }
        }
        Ok(out)
    }

    /// Trains and predicts one fold.
    fn run_fold(
        &self,
        config: &RunConfig,
        data: &Dataset,
        vocabulary: &LabelVocabulary,
        fold: usize,
        run_id: &str,
    ) -> Result<(FoldPredictions, Vec<String>)> {
        let (learn_clips, train_clips, test_clips) = data.fold_split(fold);
        if train_clips.is_empty() {
            return Err(Error::Empty(format!("fold {fold} has no training clips")));
        }
        let t = Instant::now();
        let learned = if config.feature.is_learned() {
            self.audit.record(run_id, fold, AuditStage::FeatureLearning, learn_clips.iter().map(|e| e.clip_id.as_str()));
            Some(self.learn_features(config.feature, config.noise_reduction, &config.learning, &learn_clips)?)
        } else {
            None
        };
        log::info!("fold {fold}: feature learning {:.2?}", t.elapsed());
        let t = Instant::now();
        let model = learned.as_ref().map(|(k, m)| (k.as_str(), m));
        let train_x = self.extract(&train_clips, config.feature, config.noise_reduction, config.window, model)?;
        let test_x = self.extract(&test_clips, config.feature, config.noise_reduction, config.window, model)?;
        if train_x.rows.is_empty() {
            return Err(Error::Empty(format!("fold {fold}: every training clip was excluded")));
        }

        let labels_of: BTreeMap<&str, &BTreeSet<String>> =
            train_clips.iter().map(|e| (e.clip_id.as_str(), &e.labels)).collect();
        let mut y = Array2::from_elem((train_x.rows.len(), vocabulary.len()), false);
        for (i, r) in train_x.rows.iter().enumerate() {
            for (j, b) in vocabulary.indicator(labels_of[r.clip_id.as_str()]).into_iter().enumerate() {
                y[[i, j]] = b;
            }
        }
        log::info!("fold {fold}: features and summaries {:.2?}", t.elapsed());
        let (mut xtr, mut xte) = (train_x.matrix(), test_x.matrix());
        if let Some(seed) = config.random_projection {
            let rp = RandomProjection::new(xtr.ncols(), seed);
            xtr = rp.project(xtr.view())?;
            if !test_x.rows.is_empty() {
                xte = rp.project(xte.view())?;
            }
        }
        self.audit.record(run_id, fold, AuditStage::Training, train_x.clip_ids().iter().map(String::as_str));
        let t = Instant::now();
        let model = self
            .install(|| train(xtr.view(), y.view(), vocabulary, config.classifier, &config.forest))
            .map_err(|e| e.at_stage("train", format!("fold {fold}")))?;
        log::info!("fold {fold}: training {:.2?}", t.elapsed());
        let t = Instant::now();
        let tested = test_x.clip_ids();
        self.audit.record(run_id, fold, AuditStage::Testing, tested.iter().map(String::as_str));
        let windows = if test_x.rows.is_empty() {
            PredictionMatrix::new(Vec::new(), vocabulary.clone(), Array2::zeros((0, vocabulary.len())))?
        } else {
            self.install(|| predict_proba(&model, xte.view(), test_x.keys()))?
        };
        log::info!("fold {fold}: prediction {:.2?}", t.elapsed());
        let mut excluded = train_x.excluded;
        excluded.extend(test_x.excluded);
        Ok((FoldPredictions { fold, test_clips: tested.into_iter().collect(), windows }, excluded))
    }

    fn check_compatible(config: &RunConfig, data: &Dataset) -> Result<()> {
        config.validate()?;
        if config.classifier == ClassifierMode::SingleLabel {
            let multi = data.primary.labelling() == Labelling::Multilabel
                || data.auxiliary().iter().any(|e| e.labels.len() != 1);
            if multi {
                return Err(Error::Config(
                    "the single-label classifier cannot be used with multilabel data".into(),
                ));
            }
        }
        Ok(())
    }

    /// One crossvalidated experiment.
    pub fn run_single(&self, config: &RunConfig, data: &Dataset) -> Result<EvalReport> {
        Self::check_compatible(config, data)?;
        let vocabulary = data.vocabulary();
        let mut run_id = config.run_id();
        if let Some(mode) = data.augment {
            run_id.push_str(&format!(";augment={mode}"));
        }
        let mut folds = Vec::new();
        let mut excluded = BTreeSet::new();
        for fold in 0..data.fold_count() {
            let (fp, ex) = self.run_fold(config, data, &vocabulary, fold, &run_id)?;
            folds.push(fp);
            excluded.extend(ex);
        }
        let mut report = evaluate_run(&data.primary, &folds, EvalOptions { pool: config.pool, auc: config.auc })?;
        report.config = config.fingerprint();
        if let Some(mode) = data.augment {
            report.config.insert("augment".into(), mode.to_string());
        }
        report.excluded_clips = excluded.into_iter().collect();
        Ok(report)
    }

    /// Every configuration of `grid`; failed runs are recorded and the
    /// rest continue.
    pub fn run_grid(&self, grid: &GridSpec, data: &Dataset) -> GridOutcome {
        let mut out = GridOutcome::default();
        let runs = grid.expand();
        log::info!("grid: {} runs", runs.len());
        for (i, cfg) in runs.iter().enumerate() {
            log::info!("run {}/{}: {}", i + 1, runs.len(), cfg.run_id());
            match self.run_single(cfg, data) {
                Ok(r) => out.reports.push(r),
                Err(e) => {
                    log::error!("run {} failed: {e}", cfg.run_id());
                    out.failures.push((cfg.fingerprint(), e.to_string()));
                }
            }
        }
        out
    }

    /// Data augmentation and cross-condition experiments: `primary`
    /// provides the test folds, `auxiliary` extra data per `mode`.
    pub fn run_augmented(&self, config: &RunConfig, primary: &Manifest, auxiliary: &Manifest, mode: AugmentMode) -> Result<EvalReport> {
        let data = Dataset::with_auxiliary(primary.clone(), auxiliary, mode)?;
        self.run_single(config, &data)
    }

    /// Trains on every clip of `clips` (no crossvalidation), for the
    /// command-line `train` step.
    pub fn train_on(&self, extracted: &Extracted, clips: &[&ManifestEntry], vocabulary: &LabelVocabulary, mode: ClassifierMode, params: &ForestParams) -> Result<TrainedModel> {
        let labels_of: BTreeMap<&str, &BTreeSet<String>> = clips.iter().map(|e| (e.clip_id.as_str(), &e.labels)).collect();
        let mut y = Array2::from_elem((extracted.rows.len(), vocabulary.len()), false);
        for (i, r) in extracted.rows.iter().enumerate() {
            let labels = labels_of
                .get(r.clip_id.as_str())
                .ok_or_else(|| Error::Integrity(format!("summary row for unknown clip `{}`", r.clip_id)))?;
            for (j, b) in vocabulary.indicator(*labels).into_iter().enumerate() {
                y[[i, j]] = b;
            }
        }
        let x = extracted.matrix();
        self.install(|| train(x.view(), y.view(), vocabulary, mode, params))
    }
}
