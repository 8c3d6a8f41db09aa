use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use birdsong::dataset::{assign_folds, load_manifest, FoldScheme, Labelling, Manifest, ManifestEntry};
use birdsong::evaluate::{evaluate_run, write_reports_csv, write_reports_json, EvalOptions, FoldPredictions, PoolMode};
use birdsong::forest::{predict_proba, ClassifierMode, PredictionMatrix, RowKey, TrainedModel};
use birdsong::pipeline::{
    export_bases, load_config_file, AugmentMode, Cache, Dataset, Extracted, FileConfig, GridSpec, LearnedModel, Pipeline,
};
use birdsong::summarize::{load_summaries, save_summaries, DecisionWindow, FeatureConfig};
use birdsong::Error;

#[derive(Parser)]
#[command(name = "birdsong", version, about = "Bird sound classification with learned spectro-temporal features")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for cached intermediate results (in memory when absent).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for feature learning, forests, fold assignment and projection.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Clone)]
struct Data {
    /// Clip manifest (clip_id,audio_path,labels,fold,recordist).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Deal clips into this many seeded folds when the manifest has none.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args, Clone)]
struct Features {
    /// Feature configuration label, e.g. melspec-kfl4-ms.
    #[arg(long)]
    feature: Option<FeatureConfig>,
    #[arg(long, value_enum)]
    noise_reduction: Option<Switch>,
    /// Codebook size for learned features.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Split {
    /// Clips outside the fold.
    Train,
    /// Clips inside the fold.
    Test,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Every axis value from the configuration file.
    Config,
    /// Twelve features, noise reduction, two classifiers, four windows, two pools.
    Full,
    /// As `full` with 1 s and 5 s windows only.
    ShortWindows,
    /// As `full` with whole-clip decisions only.
    WholeClip,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a feature codebook from the clips outside a fold.
    LearnFeatures {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        features: Features,
        /// Held-out fold; learn from every clip when absent.
        #[arg(long)]
        fold: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute windowed summary vectors for a set of clips.
    Extract {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        features: Features,
        /// Learned model, required for learned feature types.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Decision window in seconds, or `whole`.
        #[arg(long)]
        window: Option<DecisionWindow>,
        #[arg(long)]
        fold: Option<usize>,
        #[arg(long, value_enum, default_value = "all")]
        split: Split,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a random forest on extracted summaries.
    Train {
        #[command(flatten)]
        data: Data,
        /// Directory written by `extract`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        classifier: Option<ClassifierMode>,
        #[arg(long)]
        n_trees: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-window label probabilities for extracted summaries.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pool window predictions per clip and score them against a manifest.
    Evaluate {
        #[command(flatten)]
        data: Data,
        /// Prediction CSVs, one per evaluated fold.
        #[arg(long, required = true, num_args = 1..)]
        predictions: Vec<PathBuf>,
        /// Folds the prediction files belong to, in the same order.
        #[arg(long, num_args = 1..)]
        fold: Vec<usize>,
        #[arg(long)]
        pool: Option<PoolMode>,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Crossvalidate every run of a configuration grid.
    Grid {
        #[command(flatten)]
        data: Data,
        #[arg(long, value_enum, default_value = "config")]
        preset: Preset,
        /// Report the number of runs and stop.
        #[arg(long)]
        dry_run: bool,
        /// Per-fold report CSV; a JSON report is written alongside.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the audit log of consumed clips here.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Augmentation and cross-condition experiments with auxiliary data.
    Augment {
        #[command(flatten)]
        data: Data,
        #[command(flatten)]
        features: Features,
        #[arg(long)]
        auxiliary: Option<PathBuf>,
        #[arg(long)]
        mode: Option<AugmentMode>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write learned bases as un-whitened frame × band grids.
    ExportBases {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 16)]
        count: usize,
        /// Also render PNG images.
        #[arg(long)]
        images: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error tagged with the stage that raised it.
struct Failure {
    stage: String,
    error: Error,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self.error {
            Error::Config(_) | Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}

trait Tag<T> {
    fn stage(self, stage: &str) -> Result<T, Failure>;
}

impl<T> Tag<T> for birdsong::Result<T> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|error| match error {
            Error::Stage { stage, clip, source } => Failure { stage: format!("{stage}:{clip}"), error: *source },
            error => Failure { stage: stage.to_string(), error },
        })
    }
}

struct Ctx {
    file: FileConfig,
    pipeline: Pipeline,
    seed: Option<u64>,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, Failure> {
        let mut file = match &common.config {
            Some(p) => load_config_file(p).stage("config")?,
            None => FileConfig::default(),
        };
        if let Some(seed) = common.seed {
            file.grid.reseed(seed);
            file.grid.base.random_projection = file.grid.base.random_projection.map(|_| seed);
        }
        let cache = match common.cache_dir.as_ref().or(file.cache_dir.as_ref()) {
            Some(d) => Cache::on_disk(d).stage("cache")?,
            None => Cache::in_memory(),
        };
        let mut pipeline = Pipeline::new(cache);
        if let Some(w) = common.workers.or(file.workers) {
            pipeline = pipeline.with_workers(w).stage("config")?;
        }
        Ok(Ctx { file, pipeline, seed: common.seed })
    }

    fn manifest(&self, data: &Data) -> Result<Manifest, Failure> {
        let path = data
            .manifest
            .clone()
            .or_else(|| self.file.manifest.clone())
            .ok_or_else(|| Failure { stage: "config".into(), error: Error::Config("no manifest given".into()) })?;
        let m = load_manifest(&path).stage("manifest")?;
        match data.folds.or(self.file.folds) {
            Some(k) if m.fold_count().is_none() => {
                assign_folds(&m, FoldScheme::Random { k, seed: self.seed.unwrap_or(0) }).stage("manifest")
            }
            _ => Ok(m),
        }
    }

    fn feature(&self, f: &Features) -> (FeatureConfig, bool) {
        let feature = f.feature.unwrap_or(self.file.grid.base.feature);
        let nr = match f.noise_reduction {
            Some(Switch::On) => true,
            Some(Switch::Off) => false,
            None => self.file.grid.base.noise_reduction,
        };
        (feature, nr)
    }

    fn learning(&self, f: &Features) -> birdsong::pipeline::LearningParams {
        let mut l = self.file.grid.base.learning.clone();
        if let Some(k) = f.k {
            l.k = k;
        }
        l
    }
}

fn select<'a>(m: &'a Manifest, fold: Option<usize>, split: Split) -> Vec<&'a ManifestEntry> {
    match (fold, split) {
        (None, _) | (_, Split::All) => m.entries().iter().collect(),
        (Some(f), Split::Train) => m.outside_fold(f).collect(),
        (Some(f), Split::Test) => m.fold_members(f).collect(),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx::new(&cli.common)?;
    match cli.command {
        Command::LearnFeatures { data, features, fold, out } => {
            let m = ctx.manifest(&data)?;
            let (feature, nr) = ctx.feature(&features);
            let clips = select(&m, fold, Split::Train);
            let (_, model) = ctx.pipeline.learn_features(feature, nr, &ctx.learning(&features), &clips).stage("featlearn")?;
            model.save(&out).stage("featlearn")?;
            eprintln!("learned {feature} from {} clips -> {}", clips.len(), out.display());
        }
        Command::Extract { data, features, model, window, fold, split, out } => {
            let m = ctx.manifest(&data)?;
            let (feature, nr) = ctx.feature(&features);
            let window = window.unwrap_or(ctx.file.grid.base.window);
            let learned = match (&model, feature.is_learned()) {
                (Some(p), true) => Some(LearnedModel::load(p).stage("model")?),
                (None, true) => {
                    return Err(Failure {
                        stage: "config".into(),
                        error: Error::Config(format!("`{feature}` needs --model from learn-features")),
                    })
                }
                (_, false) => None,
            };
            let key = model.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
            let clips = select(&m, fold, split);
            let ex = ctx
                .pipeline
                .extract(&clips, feature, nr, window, learned.as_ref().map(|l| (key.as_str(), l)))
                .stage("extract")?;
            for c in &ex.excluded {
                eprintln!("warning: `{c}` is too short for {feature}; skipped");
            }
            save_summaries(&out, &ex.rows).stage("extract")?;
            eprintln!("{} summary rows from {} clips -> {}", ex.rows.len(), clips.len(), out.display());
        }
        Command::Train { data, features, classifier, n_trees, out } => {
            let m = ctx.manifest(&data)?;
            let rows = load_summaries(&features).stage("train")?;
            let ids: BTreeSet<&str> = rows.iter().map(|r| r.clip_id.as_str()).collect();
            let clips: Vec<&ManifestEntry> = m.entries().iter().filter(|e| ids.contains(e.clip_id.as_str())).collect();
            let mode = classifier.unwrap_or(ctx.file.grid.base.classifier);
            if mode == ClassifierMode::SingleLabel && m.labelling() == Labelling::Multilabel {
                return Err(Failure {
                    stage: "config".into(),
                    error: Error::Config("the single-label classifier cannot be used with multilabel data".into()),
                });
            }
            let mut params = ctx.file.grid.base.forest.clone();
            if let Some(n) = n_trees {
                params.n_trees = n;
            }
            let ex = Extracted { rows, excluded: Vec::new() };
            let model = ctx.pipeline.train_on(&ex, &clips, &m.vocabulary(), mode, &params).stage("train")?;
            model.save(&out).stage("train")?;
            eprintln!("trained {mode} forest on {} rows -> {}", ex.rows.len(), out.display());
        }
        Command::Predict { model, features, out } => {
            let model = TrainedModel::load(&model).stage("predict")?;
            let ex = Extracted { rows: load_summaries(&features).stage("predict")?, excluded: Vec::new() };
            let keys: Vec<RowKey> = ex.keys();
            let p = predict_proba(&model, ex.matrix().view(), keys).stage("predict")?;
            p.save_csv(&out).stage("predict")?;
            eprintln!("{} predictions -> {}", p.len(), out.display());
        }
        Command::Evaluate { data, predictions, fold, pool, out } => {
            let m = ctx.manifest(&data)?;
            if !fold.is_empty() && fold.len() != predictions.len() {
                return Err(Failure {
                    stage: "config".into(),
                    error: Error::Config("give one --fold per --predictions file".into()),
                });
            }
            let mut folds = Vec::new();
            for (i, path) in predictions.iter().enumerate() {
                let windows = PredictionMatrix::load_csv(path).stage("evaluate")?;
                let test_clips = match fold.get(i) {
                    Some(&f) => m.fold_members(f).map(|e| e.clip_id.clone()).collect(),
                    None => windows.keys.iter().map(|k| k.clip_id.clone()).collect::<BTreeSet<_>>().into_iter().collect(),
                };
                folds.push(FoldPredictions { fold: fold.get(i).copied().unwrap_or(i), test_clips, windows });
            }
            let options = EvalOptions { pool: pool.unwrap_or(ctx.file.grid.base.pool), auc: ctx.file.grid.base.auc };
            let report = evaluate_run(&m, &folds, options).stage("evaluate")?;
            for f in &report.folds {
                println!("fold {}: auc {:.4} map {:.4} ({} clips)", f.fold, f.auc, f.map, f.clips);
            }
            println!("auc {:.4} map {:.4}", report.auc, report.map);
            if let Some(out) = out {
                write_reports_json(&[report], &out).stage("evaluate")?;
            }
        }
        Command::Grid { data, preset, dry_run, out, audit } => {
            let m = ctx.manifest(&data)?;
            let second = match m.labelling() {
                Labelling::SingleLabel => ClassifierMode::SingleLabel,
                Labelling::Multilabel => ClassifierMode::BinaryRelevance,
            };
            let mut grid = match preset {
                Preset::Config => ctx.file.grid.clone(),
                Preset::Full => GridSpec { base: ctx.file.grid.base.clone(), ..GridSpec::full(second) },
                Preset::ShortWindows => GridSpec { base: ctx.file.grid.base.clone(), ..GridSpec::short_windows(second) },
                Preset::WholeClip => GridSpec { base: ctx.file.grid.base.clone(), ..GridSpec::whole_clip(second) },
            };
            if let Some(seed) = ctx.seed {
                grid.reseed(seed);
            }
            grid.validate().stage("config")?;
            println!("grid: {} runs", grid.len());
            if dry_run {
                return Ok(());
            }
            let dataset = Dataset::new(m).stage("manifest")?;
            let outcome = ctx.pipeline.run_grid(&grid, &dataset);
            for (cfg, err) in &outcome.failures {
                eprintln!("run failed [{}]: {err}", cfg.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "));
            }
            for r in &outcome.reports {
                println!("{} {} auc {:.4} map {:.4}", r.config["feature"], r.config["window"], r.auc, r.map);
            }
            let out = out.or_else(|| ctx.file.output.clone()).unwrap_or_else(|| PathBuf::from("grid_results.csv"));
            write_reports_csv(&outcome.reports, &out).stage("report")?;
            write_reports_json(&outcome.reports, &out.with_extension("json")).stage("report")?;
            if let Some(a) = audit {
                let json = ctx.pipeline.audit.to_json().map_err(|e| Failure { stage: "audit".into(), error: e.into() })?;
                std::fs::write(&a, json).map_err(|e| Failure { stage: "audit".into(), error: e.into() })?;
            }
            let leaks = ctx.pipeline.audit.leaks();
            if !leaks.is_empty() {
                return Err(Failure {
                    stage: "audit".into(),
                    error: Error::Integrity(format!("{} test-fold leaks detected", leaks.len())),
                });
            }
            if outcome.reports.is_empty() {
                return Err(Failure { stage: "grid".into(), error: Error::Empty("every run failed".into()) });
            }
        }
        Command::Augment { data, features, auxiliary, mode, out } => {
            let primary = ctx.manifest(&data)?;
            let aux_path = auxiliary.or_else(|| ctx.file.auxiliary.clone()).ok_or_else(|| Failure {
                stage: "config".into(),
                error: Error::Config("no auxiliary manifest given".into()),
            })?;
            let aux = load_manifest(&aux_path).stage("manifest")?;
            let mode = mode.or(ctx.file.augment).unwrap_or(AugmentMode::FeaturesOnly);
            let (feature, noise_reduction) = ctx.feature(&features);
            let mut config = ctx.file.grid.base.clone();
            config.feature = feature;
            config.noise_reduction = noise_reduction;
            config.learning = ctx.learning(&features);
            let report = ctx.pipeline.run_augmented(&config, &primary, &aux, mode).stage("augment")?;
            println!("{mode}: auc {:.4} map {:.4}", report.auc, report.map);
            if let Some(out) = out.or_else(|| ctx.file.output.clone()) {
                write_reports_json(&[report], &out).stage("report")?;
            }
        }
        Command::ExportBases { model, count, images, out } => {
            let model = LearnedModel::load(&model).stage("export")?;
            let written = export_bases(model.first_layer(), count, &out, images).stage("export")?;
            eprintln!("{} bases -> {}", written.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.stage, f.error);
            let mut source = std::error::Error::source(&f.error);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(f.exit_code())
        }
    }
}
