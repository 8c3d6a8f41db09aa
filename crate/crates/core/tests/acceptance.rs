//! Acceptance suite: every criterion runs in sequence and prints one
//! PASS/FAIL line; the test fails if any criterion does.
//!
//! Run with `cargo test -p birdsong --test acceptance`.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use birdsong::dataset::{LabelVocabulary, ManifestEntry};
use birdsong::evaluate::{auc, mean_average_precision, reports_csv_string, PoolMode};
use birdsong::featlearn::{fit_whitening, skmeans_learn, SkmParams, DEFAULT_EPSILON};
use birdsong::forest::{ClassifierMode, ForestParams, PredictionMatrix, RowKey};
use birdsong::pipeline::{AuditStage, Dataset, GridSpec, LearningParams, Pipeline, RunConfig};
use birdsong::spectral::{noise_reduce, MelSpectrogram, FRAME_SIZE, MEL_BANDS};
use birdsong::summarize::{DecisionWindow, FeatureConfig};
use birdsong::synth::{generate_corpus, CorpusKind, SynthConfig};
use birdsong::{DimMeaning, FeatureSeries};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> String {
    format!("{:.1}s of {}s budget", elapsed.as_secs_f64(), limit.as_secs())
}

fn dimensionality() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    // long enough that the pooled second layer sees more patches than its 2000 input dims
    let synth = SynthConfig { classes: 5, clips_per_class: 2, clip_seconds: 45.0, ..SynthConfig::default() };
    let manifest = generate_corpus(dir.path(), &synth).unwrap();
    let clips: Vec<&ManifestEntry> = manifest.entries().iter().collect();
    let table = [
        ("mfcc-ms", 52),
        ("mfcc-maxp", 26),
        ("mfcc-modul", 260),
        ("melspec-ms", 80),
        ("melspec-maxp", 40),
        ("melspec-modul", 400),
        ("melspec-kfl1-ms", 1000),
        ("melspec-kfl2-ms", 1000),
        ("melspec-kfl3-ms", 1000),
        ("melspec-kfl4-ms", 1000),
        ("melspec-kfl8-ms", 1000),
        ("melspec-kfl4pl8kfl4-ms", 1000),
    ];
    let pipeline = Pipeline::default();
    let learning = LearningParams { k: 500, ..LearningParams::default() };
    let mut wrong = Vec::new();
    for (label, expected) in table {
        let feature: FeatureConfig = label.parse().unwrap();
        let learned = feature
            .is_learned()
            .then(|| pipeline.learn_features(feature, false, &learning, &clips).unwrap());
        let model = learned.as_ref().map(|(k, m)| (k.as_str(), m));
        let ex = pipeline.extract(&clips, feature, false, DecisionWindow::Whole, model).unwrap();
        let widths: BTreeSet<usize> = ex.rows.iter().map(|r| r.values.len()).collect();
        if ex.rows.len() != clips.len() || widths != BTreeSet::from([expected]) {
            wrong.push(format!("{label}: {widths:?}"));
        }
    }
    let limit = Duration::from_secs(60);
    let elapsed = start.elapsed();
    let detail = if wrong.is_empty() { "12/12 widths exact".to_string() } else { wrong.join("; ") };
    outcome(wrong.is_empty() && elapsed < limit, format!("{detail}, {}", within(elapsed, limit)))
}

fn angle_of(x: f64, y: f64) -> f64 {
    y.atan2(x)
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn spherical_kmeans_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let centres = [20f64.to_radians(), 140f64.to_radians(), 255f64.to_radians()];
    let spread = Normal::new(0.0f64, 5f64.to_radians()).unwrap();
    let radius = Normal::new(1.0f64, 0.2).unwrap();
    let n = 3000;
    let mut points = Array2::zeros((n, 2));
    for i in 0..n {
        let theta = centres[i % 3] + spread.sample(&mut rng);
        let r: f64 = radius.sample(&mut rng).abs() + 0.05;
        points[[i, 0]] = r * theta.cos();
        points[[i, 1]] = r * theta.sin();
    }
    let series = vec![FeatureSeries::new(points, DimMeaning::Summary, 1)];
    let params = SkmParams { k: 10, sample_size: n, seed: 5, whiten: false, ..SkmParams::default() };
    let cb = skmeans_learn(&series, &params, 1).unwrap();
    let worst_norm = cb
        .bases()
        .rows()
        .into_iter()
        .map(|b| (b.dot(&b).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    let worst_angle = centres
        .iter()
        .map(|&c| {
            cb.bases()
                .rows()
                .into_iter()
                .map(|b| angular_gap(angle_of(b[0], b[1]), c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
        .to_degrees();
    let limit = Duration::from_secs(10);
    let elapsed = start.elapsed();
    outcome(
        worst_angle <= 15.0 && worst_norm <= 1e-6 && elapsed < limit,
        format!(
            "worst direction {worst_angle:.2} deg (<= 15), worst |norm-1| {worst_norm:.1e}, {}",
            within(elapsed, limit)
        ),
    )
}

fn whitening() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let d = 40;
    let mixing = Array2::from_shape_fn((d, d), |_| StandardNormal.sample(&mut rng));
    let offset = Array1::from_shape_fn(d, |_| rng.gen_range(-5.0..5.0));
    let z: Array2<f64> = Array2::from_shape_fn((5000, d), |_| StandardNormal.sample(&mut rng));
    let x = z.dot(&mixing.t()) + &offset;
    let w = fit_whitening(x.view(), DEFAULT_EPSILON).unwrap();
    let y = w.apply_rows(x.view());
    // independent covariance estimate from the whitened sample
    let n = y.nrows() as f64;
    let mean = y.sum_axis(ndarray::Axis(0)) / n;
    let c = (&y - &mean).t().dot(&(&y - &mean)) / (n - 1.0);
    let worst = c
        .indexed_iter()
        .map(|((i, j), v)| (v - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let limit = Duration::from_secs(5);
    let elapsed = start.elapsed();
    outcome(worst < 5e-2 && elapsed < limit, format!("max |C - I| = {worst:.2e} (< 5e-2), {}", within(elapsed, limit)))
}

fn pairwise_auc(scores: &[f64], truth: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0u64, 0u64);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if truth[i] && !truth[j] {
                pairs += 2;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    wins as f64 / pairs as f64
}

fn auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..80);
        let levels = rng.gen_range(2..10);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
        let mut truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        truth[0] = true;
        truth[n - 1] = false;
        worst = worst.max((auc(&scores, &truth).unwrap() - pairwise_auc(&scores, &truth)).abs());
    }
    let scores: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
    let truth: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.5)).collect();
    let chance = auc(&scores, &truth).unwrap();
    outcome(
        worst <= 1e-12 && (chance - 0.5).abs() <= 0.02,
        format!("max |rank - pairwise| = {worst:.1e} over 200 tied instances, chance AUC {chance:.4}"),
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// AP of a ranking (best first) as an exact fraction over 60ths, divided
/// once at the end.
fn exhaustive_ap(ranking: &[usize], truth: &[bool]) -> f64 {
    let relevant: Vec<usize> = (0..ranking.len()).filter(|&r| truth[ranking[r]]).collect();
    let sixtieths: usize = relevant.iter().enumerate().map(|(hits, &r)| (hits + 1) * 60 / (r + 1)).sum();
    sixtieths as f64 / (60 * relevant.len()) as f64
}

fn map_oracle() -> Outcome {
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for l in 1..=6 {
        let names: Vec<String> = (0..l).map(|j| format!("l{j}")).collect();
        let vocab = LabelVocabulary::from_names(names.clone());
        for mask in 1u32..(1 << l) {
            let truth: Vec<bool> = (0..l).map(|j| mask >> j & 1 == 1).collect();
            let labels: BTreeSet<String> = (0..l).filter(|&j| truth[j]).map(|j| names[j].clone()).collect();
            let gold = HashMap::from([("c".to_string(), labels)]);
            for ranking in permutations(l) {
                let mut scores = vec![0.0; l];
                for (r, &j) in ranking.iter().enumerate() {
                    scores[j] = (l - r) as f64 / l as f64;
                }
                let m = PredictionMatrix::new(
                    vec![RowKey { clip_id: "c".into(), window_index: 0 }],
                    vocab.clone(),
                    Array2::from_shape_vec((1, l), scores).unwrap(),
                )
                .unwrap();
                let got = mean_average_precision(&m, &gold).unwrap().map;
                checked += 1;
                if got != exhaustive_ap(&ranking, &truth) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{checked} (label set, ranking) cases, {mismatches} mismatches"))
}

fn benchmark_single_label() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_corpus(dir.path(), &SynthConfig::default()).unwrap();
    let data = Dataset::new(manifest).unwrap();
    let config = RunConfig {
        feature: "melspec-kfl4-ms".parse().unwrap(),
        classifier: ClassifierMode::Multilabel,
        ..RunConfig::default()
    };
    let r = Pipeline::default().run_single(&config, &data).unwrap();
    let limit = Duration::from_secs(300);
    let elapsed = start.elapsed();
    outcome(
        r.auc >= 0.95 && r.map >= 0.85 && elapsed < limit,
        format!("AUC {:.4} (>= 0.95), MAP {:.4} (>= 0.85), {}", r.auc, r.map, within(elapsed, limit)),
    )
}

fn directional_finding() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        kind: CorpusKind::SweepPairs,
        classes: 6,
        clips_per_class: 30,
        extra_label_prob: 0.5,
        ..SynthConfig::default()
    };
    let data = Dataset::new(generate_corpus(dir.path(), &synth).unwrap()).unwrap();
    let pipeline = Pipeline::default();
    let score = |label: &str| {
        let config = RunConfig { feature: label.parse().unwrap(), classifier: ClassifierMode::Multilabel, ..RunConfig::default() };
        pipeline.run_single(&config, &data).unwrap().auc
    };
    let (learned, mel, mfcc) = (score("melspec-kfl4-ms"), score("melspec-ms"), score("mfcc-ms"));
    let soft = if mel >= mfcc { "holds" } else { "does not hold (soft)" };
    outcome(
        learned >= mel - 0.02,
        format!(
            "AUC kfl4 {learned:.4}, melspec {mel:.4}, mfcc {mfcc:.4}; kfl4 >= melspec - 0.02 required, melspec >= mfcc {soft}"
        ),
    )
}

fn noise_reduction_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (frames, bands) = (120, MEL_BANDS);
    let floor: Vec<f64> = (0..bands).map(|_| rng.gen_range(0.01..1.0)).collect();
    let impulses = [7usize, 50, 51, 99];
    let mut v = Array2::from_shape_fn((frames, bands), |(_, m)| floor[m]);
    for &t in &impulses {
        for m in 0..bands {
            v[[t, m]] += rng.gen_range(0.5..3.0);
        }
    }
    let spec = MelSpectrogram {
        values: v,
        frame_hop: FRAME_SIZE as u32,
        sample_rate: 44_100,
        band_centers: (0..bands).map(|m| 500.0 + 100.0 * m as f64).collect(),
    };
    let out = noise_reduce(&spec);
    let leaked = (0..frames)
        .filter(|t| !impulses.contains(t))
        .filter(|&t| out.values.row(t).iter().any(|&x| x != 0.0))
        .count();
    let mut worst = 0.0f64;
    for a in [1e-3, 0.37, 2.0, 1e4] {
        let scaled = MelSpectrogram { values: &spec.values * a, ..spec.clone() };
        let lhs = noise_reduce(&scaled).values;
        let rhs = &out.values * a;
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            let denom = x.abs().max(y.abs());
            if denom > 0.0 {
                worst = worst.max((x - y).abs() / denom);
            }
        }
    }
    outcome(
        leaked == 0 && worst <= 1e-9,
        format!("{leaked} non-impulse frames nonzero (0 required), worst relative homogeneity error {worst:.1e}"),
    )
}

fn small_grid_corpus(dir: &Path) -> Dataset {
    let synth = SynthConfig { classes: 4, clips_per_class: 8, clip_seconds: 3.0, seed: 12, ..SynthConfig::default() };
    Dataset::new(generate_corpus(dir, &synth).unwrap()).unwrap()
}

/// Reduced grid for the audit and determinism checks: every feature type,
/// noise reduction, both classifiers, two windows and both pools, with a
/// small codebook and forest so it runs at test time.
fn small_grid() -> GridSpec {
    let mut grid = GridSpec::full(ClassifierMode::SingleLabel);
    grid.windows = vec![DecisionWindow::Seconds(1), DecisionWindow::Whole];
    grid.base.learning = LearningParams { k: 40, sample_size: 4000, seed: 2, ..LearningParams::default() };
    grid.base.forest = ForestParams { n_trees: 40, seed: 2, ..ForestParams::default() };
    grid
}

fn leakage_audit() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = small_grid_corpus(dir.path());
    let grid = small_grid();
    let pipeline = Pipeline::default();
    let outcome_ = pipeline.run_grid(&grid, &data);
    let fold_of: HashMap<&str, usize> =
        data.primary.entries().iter().map(|e| (e.clip_id.as_str(), e.fold.unwrap())).collect();
    let records = pipeline.audit.records();
    let mut consumed = 0usize;
    let mut leaked = 0usize;
    for r in records.iter().filter(|r| r.stage != AuditStage::Testing) {
        for c in &r.clip_ids {
            consumed += 1;
            if fold_of[c.as_str()] == r.fold {
                leaked += 1;
            }
        }
    }
    let runs_with_learning: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.stage == AuditStage::FeatureLearning)
        .map(|r| r.run.as_str())
        .collect();
    let reported_leaks = pipeline.audit.leaks().len();
    outcome(
        leaked == 0 && reported_leaks == 0 && outcome_.failures.is_empty() && outcome_.reports.len() == grid.len(),
        format!(
            "{} runs ({} failed, {} with feature learning), {consumed} consumed clip ids audited, {leaked} from test folds",
            outcome_.reports.len(),
            outcome_.failures.len(),
            runs_with_learning.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = small_grid_corpus(dir.path());
    let mut grid = small_grid();
    grid.noise_reduction = vec![true];
    grid.pools = vec![PoolMode::Max];
    let first = Pipeline::default().run_grid(&grid, &data);
    let second = Pipeline::default().with_workers(1).unwrap().run_grid(&grid, &data);
    let a = reports_csv_string(&first.reports).unwrap();
    let b = reports_csv_string(&second.reports).unwrap();
    outcome(
        a == b && !first.reports.is_empty() && first.failures.is_empty(),
        format!("{} runs twice, report CSVs {} ({} bytes)", first.reports.len(), if a == b { "byte-identical" } else { "differ" }, a.len()),
    )
}

fn grid_cardinality() -> Outcome {
    let full = GridSpec::full(ClassifierMode::SingleLabel);
    let short = GridSpec::short_windows(ClassifierMode::BinaryRelevance);
    let whole = GridSpec::whole_clip(ClassifierMode::SingleLabel);
    let sizes = [full.expand().len(), short.expand().len(), whole.expand().len()];
    outcome(sizes == [384, 192, 96], format!("full {}, short windows {}, whole clip {}", sizes[0], sizes[1], sizes[2]))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("dimensionality contract", dimensionality),
        ("spherical k-means recovery", spherical_kmeans_recovery),
        ("whitening", whitening),
        ("AUC oracle equivalence", auc_oracle),
        ("MAP oracle equivalence", map_oracle),
        ("synthetic single-label benchmark", benchmark_single_label),
        ("learned features beat summaries on sweeps", directional_finding),
        ("noise-reduction contract", noise_reduction_contract),
        ("leakage audit", leakage_audit),
        ("determinism", determinism),
        ("grid cardinality", grid_cardinality),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        // straight to stdout so the lines show without --nocapture
        let mut out = std::io::stdout().lock();
        writeln!(out, "{tag} {:>2} {name}: {} [{:.1}s]", i + 1, o.detail, start.elapsed().as_secs_f64()).unwrap();
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
