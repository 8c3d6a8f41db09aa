//! Clip-level decision pooling and AUC / MAP evaluation over folds.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{LabelVocabulary, Manifest};
use crate::error::{Error, Result};
use crate::forest::{PredictionMatrix, RowKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PoolMode {
    #[default]
    Mean,
    Max,
}

impl fmt::Display for PoolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            PoolMode::Mean => "mean",
            PoolMode::Max => "max",
        })
    }
}

impl FromStr for PoolMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PoolMode::Mean),
            "max" => Ok(PoolMode::Max),
            _ => Err(Error::Config(format!("unknown pool mode `{s}`"))),
        }
    }
}

impl TryFrom<String> for PoolMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PoolMode> for String {
    fn from(m: PoolMode) -> String {
        m.to_string()
    }
}

/// How (clip, label) decisions are combined into one AUC per fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AucPooling {
    /// One ROC over every (clip, label) pair.
    #[default]
    Micro,
    /// Mean of per-label AUCs over labels with both classes present.
    Macro,
}

/// One row per clip (sorted by clip id), combining that clip's windows by
/// per-label mean or max.
pub fn pool_decisions(windows: &PredictionMatrix, mode: PoolMode) -> PredictionMatrix {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, key) in windows.keys.iter().enumerate() {
        groups.entry(key.clip_id.as_str()).or_default().push(i);
    }
    let l = windows.values.ncols();
    let mut values = Array2::zeros((groups.len(), l));
    let mut keys = Vec::with_capacity(groups.len());
    for (r, (clip, rows)) in groups.iter().enumerate() {
        for j in 0..l {
            let col = rows.iter().map(|&i| windows.values[[i, j]]);
            values[[r, j]] = match mode {
                PoolMode::Mean => col.sum::<f64>() / rows.len() as f64,
                PoolMode::Max => col.fold(f64::NEG_INFINITY, f64::max),
            };
        }
        keys.push(RowKey { clip_id: clip.to_string(), window_index: 0 });
    }
    PredictionMatrix { keys, vocabulary: windows.vocabulary.clone(), values }
}

/// Rank-based (Mann–Whitney) AUC; tied scores share their average rank, so
/// a tied positive/negative pair counts one half.
pub fn auc(scores: &[f64], truths: &[bool]) -> Result<f64> {
    if scores.len() != truths.len() {
        return Err(Error::Dimension { context: "auc", expected: scores.len(), got: truths.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("AUC scores contain NaN".into()));
    }
    let pos = truths.iter().filter(|&&t| t).count();
    let neg = truths.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined(format!("AUC needs both classes, got {pos} positive and {neg} negative")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of 1-based ranks of positives, doubled to stay in integers
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged: (i + j + 2) / 2
        let tied_pos = order[i..=j].iter().filter(|&&k| truths[k]).count() as u128;
        rank_sum2 += tied_pos * (i + j + 2) as u128;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

/// Mean of per-column AUCs over columns that contain both classes.
pub fn macro_auc(scores: &Array2<f64>, truths: &Array2<bool>) -> Result<f64> {
    let mut vals = Vec::new();
    for j in 0..scores.ncols() {
        let t: Vec<bool> = truths.column(j).to_vec();
        if t.iter().all(|&v| v) || t.iter().all(|&v| !v) {
            continue;
        }
        vals.push(auc(&scores.column(j).to_vec(), &t)?);
    }
    if vals.is_empty() {
        return Err(Error::Undefined("no label has both positive and negative clips".into()));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Average precision of one ranked label list. Labels are ranked by
/// descending score, ties by ascending label index. `None` when the clip
/// has no true label.
///
/// AP is a rational number; when its terms fit, it is computed exactly and
/// rounded once, so the result does not depend on summation order.
pub fn average_precision(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let n_true = truth.iter().filter(|&&t| t).count();
    if n_true == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    // (hits, rank) at each true label
    let terms: Vec<(u64, u64)> = order
        .iter()
        .enumerate()
        .filter(|(_, &j)| truth[j])
        .enumerate()
        .map(|(h, (rank, _))| (h as u64 + 1, rank as u64 + 1))
        .collect();
    exact_ap(&terms, n_true as u64).or_else(|| {
        Some(terms.iter().map(|&(h, r)| h as f64 / r as f64).sum::<f64>() / n_true as f64)
    })
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn exact_ap(terms: &[(u64, u64)], n_true: u64) -> Option<f64> {
    const EXACT: u128 = 1 << 53;
    let mut lcm: u128 = 1;
    for &(_, r) in terms {
        let r = r as u128;
        lcm = (lcm / gcd(lcm, r)).checked_mul(r)?;
    }
    let mut num: u128 = 0;
    for &(h, r) in terms {
        num = num.checked_add((h as u128).checked_mul(lcm / r as u128)?)?;
    }
    let den = lcm.checked_mul(n_true as u128)?;
    let g = gcd(num, den);
    let (num, den) = (num / g, den / g);
    (num < EXACT && den < EXACT).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub map: f64,
    pub evaluated: usize,
    /// Clips with no true label, left out of the mean.
    pub excluded: Vec<String>,
}

/// MAP over clip rows of `clip_probs` against each clip's label set.
pub fn mean_average_precision(
    clip_probs: &PredictionMatrix,
    truth: &HashMap<String, BTreeSet<String>>,
) -> Result<MapResult> {
    let vocab = &clip_probs.vocabulary;
    let mut total = 0.0;
    let mut evaluated = 0;
    let mut excluded = Vec::new();
    for (key, row) in clip_probs.keys.iter().zip(clip_probs.values.outer_iter()) {
        let labels = truth.get(&key.clip_id).ok_or_else(|| Error::Coverage(vec![key.clip_id.clone()]))?;
        let t = indicator(vocab, labels)?;
        match average_precision(&row.to_vec(), &t) {
            Some(ap) => {
                total += ap;
                evaluated += 1;
            }
            None => excluded.push(key.clip_id.clone()),
        }
    }
    if evaluated == 0 {
        return Err(Error::Undefined("MAP over zero clips with labels".into()));
    }
    Ok(MapResult { map: total / evaluated as f64, evaluated, excluded })
}

fn indicator(vocab: &LabelVocabulary, labels: &BTreeSet<String>) -> Result<Vec<bool>> {
    if let Some(unknown) = labels.iter().find(|l| vocab.index_of(l).is_none()) {
        return Err(Error::Config(format!("label `{unknown}` is not in the prediction vocabulary")));
    }
    Ok(vocab.indicator(labels))
}

/// Window-level predictions for the test clips of one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPredictions {
    pub fold: usize,
    pub test_clips: Vec<String>,
    pub windows: PredictionMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub pool: PoolMode,
    pub auc: AucPooling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub auc: f64,
    pub map: f64,
    pub clips: usize,
    pub windows: usize,
    pub map_excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Every configuration axis of the run, as strings.
    pub config: BTreeMap<String, String>,
    pub folds: Vec<FoldResult>,
    pub auc: f64,
    pub map: f64,
    pub clips: usize,
    pub windows: usize,
    pub labels: usize,
    /// Clips left out of the run before prediction, e.g. too short for the
    /// feature type.
    pub excluded_clips: Vec<String>,
}

/// Pools each fold's windows to clips, checks coverage of the fold's test
/// clips and computes per-fold AUC and MAP plus their means across folds.
pub fn evaluate_run(manifest: &Manifest, folds: &[FoldPredictions], options: EvalOptions) -> Result<EvalReport> {
    if folds.is_empty() {
        return Err(Error::Empty("no folds to evaluate".into()));
    }
    let truth: HashMap<String, BTreeSet<String>> =
        manifest.entries().iter().map(|e| (e.clip_id.clone(), e.labels.clone())).collect();
    let mut results = Vec::with_capacity(folds.len());
    let labels = folds[0].windows.vocabulary.len();
    for fp in folds {
        let pooled = pool_decisions(&fp.windows, options.pool);
        let present: BTreeSet<&str> = pooled.keys.iter().map(|k| k.clip_id.as_str()).collect();
        let missing: Vec<String> = fp.test_clips.iter().filter(|c| !present.contains(c.as_str())).cloned().collect();
        if !missing.is_empty() {
            return Err(Error::Coverage(missing));
        }
        let mut t = Array2::from_elem(pooled.values.dim(), false);
        for (r, key) in pooled.keys.iter().enumerate() {
            let set = truth.get(&key.clip_id).ok_or_else(|| Error::Coverage(vec![key.clip_id.clone()]))?;
            for (j, b) in indicator(&pooled.vocabulary, set)?.into_iter().enumerate() {
                t[[r, j]] = b;
            }
        }
        let fold_auc = match options.auc {
            AucPooling::Micro => auc(&pooled.values.iter().copied().collect::<Vec<_>>(), &t.iter().copied().collect::<Vec<_>>()),
            AucPooling::Macro => macro_auc(&pooled.values, &t),
        }
        .map_err(|e| Error::Undefined(format!("fold {}: {e}", fp.fold)))?;
        let m = mean_average_precision(&pooled, &truth)?;
        results.push(FoldResult {
            fold: fp.fold,
            auc: fold_auc,
            map: m.map,
            clips: pooled.len(),
            windows: fp.windows.len(),
            map_excluded: m.excluded,
        });
    }
    let n = results.len() as f64;
    Ok(EvalReport {
        config: BTreeMap::new(),
        auc: results.iter().map(|r| r.auc).sum::<f64>() / n,
        map: results.iter().map(|r| r.map).sum::<f64>() / n,
        clips: results.iter().map(|r| r.clips).sum(),
        windows: results.iter().map(|r| r.windows).sum(),
        labels,
        folds: results,
        excluded_clips: Vec::new(),
    })
}

/// One CSV row per (report, fold): every config axis (union over reports,
/// sorted) followed by fold, AUC, MAP and counts.
pub fn write_reports_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_reports(&mut w, reports)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    crate::binio::write_atomic(path, &bytes)
}

fn write_reports<W: std::io::Write>(w: &mut csv::Writer<W>, reports: &[EvalReport]) -> Result<()> {
    let axes: BTreeSet<&String> = reports.iter().flat_map(|r| r.config.keys()).collect();
    let mut header: Vec<String> = axes.iter().map(|s| s.to_string()).collect();
    header.extend(["fold", "auc", "map", "clips", "windows", "labels"].map(String::from));
    w.write_record(&header)?;
    for r in reports {
        for f in &r.folds {
            let mut rec: Vec<String> = axes.iter().map(|a| r.config.get(*a).cloned().unwrap_or_default()).collect();
            rec.extend([
                f.fold.to_string(),
                f.auc.to_string(),
                f.map.to_string(),
                f.clips.to_string(),
                f.windows.to_string(),
                r.labels.to_string(),
            ]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn reports_csv_string(reports: &[EvalReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write_reports(&mut w, reports)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_reports_json(reports: &[EvalReport], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(reports)?;
    crate::binio::write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_manifest, LabelVocabulary};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All permutations of 0..n (Heap's algorithm).
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        let mut a: Vec<usize> = (0..n).collect();
        let mut out = vec![a.clone()];
        let mut c = vec![0; n];
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    a.swap(0, i);
                } else {
                    a.swap(c[i], i);
                }
                out.push(a.clone());
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        out
    }

    fn brute_auc(scores: &[f64], truth: &[bool]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if truth[i] && !truth[j] {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    /// AP from the definition: for each true label, the fraction of true
    /// labels among those ranked at or above it. Summed over the common
    /// denominator 60 = lcm(1..=6), so the result is exact before the one
    /// final division.
    fn brute_ap(ranking: &[usize], truth: &[bool]) -> f64 {
        assert!(ranking.len() <= 6);
        let trues: Vec<usize> = (0..truth.len()).filter(|&j| truth[j]).collect();
        let pos = |j: usize| ranking.iter().position(|&r| r == j).unwrap();
        let sixtieths: usize = trues
            .iter()
            .map(|&j| {
                let r = pos(j);
                let above = trues.iter().filter(|&&k| pos(k) <= r).count();
                above * 60 / (r + 1)
            })
            .sum();
        sixtieths as f64 / (60 * trues.len()) as f64
    }

    fn vocab(n: usize) -> LabelVocabulary {
        LabelVocabulary::from_names((0..n).map(|i| format!("l{i}")))
    }

    fn matrix(rows: &[(&str, usize, &[f64])], l: usize) -> PredictionMatrix {
        let keys = rows.iter().map(|(c, w, _)| RowKey { clip_id: c.to_string(), window_index: *w }).collect();
        let flat: Vec<f64> = rows.iter().flat_map(|(_, _, v)| v.iter().copied()).collect();
        PredictionMatrix::new(keys, vocab(l), Array2::from_shape_vec((rows.len(), l), flat).unwrap()).unwrap()
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
        assert_eq!(auc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(Error::Undefined(_))));
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.gen_range(2..60);
            // coarse scores force ties
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 7.0).collect();
            let mut truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            truth[0] = true;
            truth[1] = false;
            assert!((auc(&scores, &truth).unwrap() - brute_auc(&scores, &truth)).abs() <= 1e-12);
        }
    }

    #[test]
    fn chance_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let scores: Vec<f64> = (0..10_000).map(|_| rng.gen()).collect();
        let truth: Vec<bool> = (0..10_000).map(|i| i % 2 == 0).collect();
        assert!((auc(&scores, &truth).unwrap() - 0.5).abs() <= 0.02);
    }

    #[test]
    fn macro_auc_skips_degenerate_labels() {
        let s = ndarray::arr2(&[[0.9, 0.3], [0.1, 0.2]]);
        let t = ndarray::arr2(&[[true, true], [false, true]]);
        assert_eq!(macro_auc(&s, &t).unwrap(), 1.0);
        let all = ndarray::arr2(&[[true, true], [true, true]]);
        assert!(macro_auc(&s, &all).is_err());
    }

    #[test]
    fn pooling_examples() {
        let single = matrix(&[("a", 0, &[0.3, 0.7])], 2);
        for mode in [PoolMode::Mean, PoolMode::Max] {
            assert_eq!(pool_decisions(&single, mode).values, single.values);
        }
        let two = matrix(&[("a", 0, &[0.2]), ("a", 1, &[0.8])], 1);
        assert!((pool_decisions(&two, PoolMode::Mean).values[[0, 0]] - 0.5).abs() < 1e-15);
        assert_eq!(pool_decisions(&two, PoolMode::Max).values[[0, 0]], 0.8);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.1], &[true, true, false]), Some(1.0));
        assert_eq!(average_precision(&[0.5, 0.9, 0.1], &[true, false, false]), Some(0.5));
        assert_eq!(average_precision(&[0.5, 0.9], &[false, false]), None);
        // a tie is broken towards the lower label index
        assert_eq!(average_precision(&[0.5, 0.5], &[false, true]), Some(0.5));
        let truth: HashMap<String, BTreeSet<String>> = [
            ("a".to_string(), BTreeSet::from(["l0".to_string()])),
            ("b".to_string(), BTreeSet::from(["l0".to_string()])),
            ("c".to_string(), BTreeSet::new()),
        ]
        .into();
        let m = matrix(&[("a", 0, &[0.9, 0.1]), ("b", 0, &[0.2, 0.8]), ("c", 0, &[0.5, 0.5])], 2);
        let r = mean_average_precision(&m, &truth).unwrap();
        assert_eq!(r.map, 0.75);
        assert_eq!(r.excluded, vec!["c".to_string()]);
    }

    #[test]
    fn ap_matches_exhaustive_rankings() {
        for l in 1..=6 {
            for mask in 1u32..(1 << l) {
                let truth: Vec<bool> = (0..l).map(|j| mask & (1 << j) != 0).collect();
                for ranking in permutations(l) {
                    // scores that realise this ranking exactly
                    let mut scores = vec![0.0; l];
                    for (r, &j) in ranking.iter().enumerate() {
                        scores[j] = (l - r) as f64;
                    }
                    assert_eq!(average_precision(&scores, &truth).unwrap(), brute_ap(&ranking, &truth));
                }
            }
        }
    }

    fn manifest(rows: &[(&str, &str, usize)]) -> Manifest {
        let mut text = String::from("clip_id,audio_path,labels,fold,recordist\n");
        for (c, l, f) in rows {
            text.push_str(&format!("{c},{c}.wav,{l},{f},\n"));
        }
        parse_manifest(&text, Path::new("m.csv"), Path::new("."), "m".into()).unwrap()
    }

    #[test]
    fn evaluate_run_perfect_and_constant() {
        let m = manifest(&[("a", "l0", 0), ("b", "l1", 0), ("c", "l0", 1), ("d", "l1", 1)]);
        let fold = |f: usize, rows: &[(&str, usize, &[f64])]| FoldPredictions {
            fold: f,
            test_clips: rows.iter().map(|r| r.0.to_string()).collect(),
            windows: matrix(rows, 2),
        };
        let perfect = [
            fold(0, &[("a", 0, &[0.9, 0.1]), ("b", 0, &[0.2, 0.7])]),
            fold(1, &[("c", 0, &[0.6, 0.1]), ("d", 0, &[0.0, 1.0])]),
        ];
        let r = evaluate_run(&m, &perfect, EvalOptions::default()).unwrap();
        assert_eq!((r.auc, r.map), (1.0, 1.0));
        assert_eq!(r.folds.len(), 2);
        let constant = [
            fold(0, &[("a", 0, &[0.5, 0.5]), ("b", 0, &[0.5, 0.5])]),
            fold(1, &[("c", 0, &[0.5, 0.5]), ("d", 0, &[0.5, 0.5])]),
        ];
        let r = evaluate_run(&m, &constant, EvalOptions::default()).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.auc, (r.folds[0].auc + r.folds[1].auc) / 2.0);
    }

    #[test]
    fn coverage_gap_lists_missing_clips() {
        let m = manifest(&[("a", "l0", 0), ("b", "l1", 0)]);
        let fp = FoldPredictions {
            fold: 0,
            test_clips: vec!["a".into(), "b".into()],
            windows: matrix(&[("a", 0, &[0.9, 0.1])], 2),
        };
        match evaluate_run(&m, &[fp], EvalOptions::default()) {
            Err(Error::Coverage(missing)) => assert_eq!(missing, vec!["b".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let mut r = EvalReport {
            config: BTreeMap::from([("feature".into(), "mfcc-ms".into()), ("window".into(), "whole".into())]),
            folds: vec![FoldResult { fold: 0, auc: 0.75, map: 0.5, clips: 4, windows: 4, map_excluded: vec![] }],
            auc: 0.75,
            map: 0.5,
            clips: 4,
            windows: 4,
            labels: 2,
            excluded_clips: vec![],
        };
        r.folds.push(FoldResult { fold: 1, ..r.folds[0].clone() });
        let text = reports_csv_string(&[r]).unwrap();
        assert_eq!(
            text,
            "feature,window,fold,auc,map,clips,windows,labels\n\
             mfcc-ms,whole,0,0.75,0.5,4,4,2\n\
             mfcc-ms,whole,1,0.75,0.5,4,4,2\n"
        );
    }

    proptest! {
        #[test]
        fn auc_monotone_invariance(
            raw in proptest::collection::vec((0u8..20, any::<bool>()), 4..80),
            a in 0.1f64..10.0,
            b in -5.0f64..5.0,
        ) {
            let scores: Vec<f64> = raw.iter().map(|(s, _)| *s as f64 / 19.0).collect();
            let mut truth: Vec<bool> = raw.iter().map(|(_, t)| *t).collect();
            truth[0] = true;
            truth[1] = false;
            let base = auc(&scores, &truth).unwrap();
            let affine: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
            let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
            prop_assert_eq!(auc(&affine, &truth).unwrap(), base);
            prop_assert_eq!(auc(&exp, &truth).unwrap(), base);
        }

        #[test]
        fn pooling_bounds(values in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
            let rows: Vec<(String, usize, Vec<f64>)> =
                values.iter().enumerate().map(|(i, v)| (format!("c{}", i % 3), i, vec![*v])).collect();
            let refs: Vec<(&str, usize, &[f64])> = rows.iter().map(|(c, w, v)| (c.as_str(), *w, v.as_slice())).collect();
            let m = matrix(&refs, 1);
            let mean = pool_decisions(&m, PoolMode::Mean);
            let max = pool_decisions(&m, PoolMode::Max);
            for (a, b) in mean.values.iter().zip(max.values.iter()) {
                prop_assert!((0.0..=1.0).contains(a) && (0.0..=1.0).contains(b));
                prop_assert!(b >= a);
            }
        }
    }
}
