//! Dataset manifests, label vocabularies and crossvalidation folds.
//!
//! A manifest is a CSV file with the header
//! `clip_id,audio_path,labels,fold,recordist`. Labels are `;`-separated,
//! `fold` is empty or a non-negative integer, and audio paths are resolved
//! relative to the directory holding the manifest.

mod audio;

pub use audio::{decode_audio, write_wav, AudioClip, STANDARD_SAMPLE_RATE};

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 5] = ["clip_id", "audio_path", "labels", "fold", "recordist"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub clip_id: String,
    /// Resolved against the manifest directory at load time.
    pub audio_path: PathBuf,
    pub labels: BTreeSet<String>,
    pub fold: Option<usize>,
    pub recordist: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Labelling {
    SingleLabel,
    Multilabel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    /// Source name, used to qualify clip ids on union collisions.
    pub name: String,
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(name: impl Into<String>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.clip_id.as_str()) {
                return Err(Error::Integrity(format!("duplicate clip_id `{}`", e.clip_id)));
            }
        }
        Ok(Manifest {
            name: name.into(),
            entries,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Manifest {
            name: name.into(),
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, clip_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.clip_id == clip_id)
    }

    pub fn vocabulary(&self) -> LabelVocabulary {
        LabelVocabulary::from_names(self.entries.iter().flat_map(|e| e.labels.iter().cloned()))
    }

    /// Single-label when every entry carries exactly one label.
    pub fn labelling(&self) -> Labelling {
        if !self.entries.is_empty() && self.entries.iter().all(|e| e.labels.len() == 1) {
            Labelling::SingleLabel
        } else {
            Labelling::Multilabel
        }
    }

    /// Number of folds, or `None` if any entry is unassigned.
    pub fn fold_count(&self) -> Option<usize> {
        let mut max = None;
        for e in &self.entries {
            let f = e.fold?;
            max = Some(max.map_or(f, |m: usize| m.max(f)));
        }
        max.map(|m| m + 1)
    }

    pub fn fold_members(&self, fold: usize) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.fold == Some(fold))
    }

    pub fn outside_fold(&self, fold: usize) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.fold != Some(fold))
    }

    /// Writes the manifest as CSV. Paths under the output directory are
    /// written relative to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MANIFEST_HEADER)?;
        for e in &self.entries {
            let rel = e.audio_path.strip_prefix(base).unwrap_or(&e.audio_path);
            let labels = e.labels.iter().cloned().collect::<Vec<_>>().join(";");
            let fold = e.fold.map(|f| f.to_string()).unwrap_or_default();
            w.write_record([
                e.clip_id.as_str(),
                &rel.to_string_lossy(),
                &labels,
                &fold,
                e.recordist.as_deref().unwrap_or(""),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        crate::binio::write_atomic(path, &bytes)
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("")).to_path_buf();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "manifest".into());
    parse_manifest(&text, path, &base, name)
}

/// Parses manifest CSV text. `source` is only used in error messages.
pub fn parse_manifest(text: &str, source: &Path, base: &Path, name: String) -> Result<Manifest> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        msg,
    };
    if text.trim().is_empty() {
        return Ok(Manifest::empty(name));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != MANIFEST_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{}`, found `{}`", MANIFEST_HEADER.join(","), names.join(",")),
        ));
    }

    let mut entries = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != MANIFEST_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", MANIFEST_HEADER.len(), record.len()),
            ));
        }
        let clip_id = record[0].trim().to_string();
        if clip_id.is_empty() {
            return Err(parse_err(line, "empty clip_id".into()));
        }
        let audio = record[1].trim();
        if audio.is_empty() {
            return Err(parse_err(line, "empty audio_path".into()));
        }
        let labels: BTreeSet<String> = record[2]
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        let fold = match record[3].trim() {
            "" => None,
            s => Some(
                s.parse::<usize>()
                    .map_err(|_| parse_err(line, format!("fold `{s}` is not a non-negative integer")))?,
            ),
        };
        let recordist = Some(record[4].trim()).filter(|s| !s.is_empty()).map(String::from);

        if let Some(first) = seen.insert(clip_id.clone(), line) {
            return Err(Error::Integrity(format!(
                "{}:{line}: duplicate clip_id `{clip_id}` (first seen on line {first})",
                source.display()
            )));
        }
        entries.push(ManifestEntry {
            clip_id,
            audio_path: base.join(audio),
            labels,
            fold,
            recordist,
        });
    }
    Ok(Manifest { name, entries })
}

/// Concatenates two manifests. Clip ids of `b` that collide with `a` are
/// qualified with `b`'s name.
pub fn union_manifests(a: &Manifest, b: &Manifest) -> Manifest {
    let mut entries = a.entries.clone();
    let mut taken: HashSet<String> = entries.iter().map(|e| e.clip_id.clone()).collect();
    for e in &b.entries {
        let mut e = e.clone();
        if taken.contains(&e.clip_id) {
            let base = format!("{}:{}", b.name, e.clip_id);
            let mut candidate = base.clone();
            let mut n = 1;
            while taken.contains(&candidate) {
                n += 1;
                candidate = format!("{base}#{n}");
            }
            e.clip_id = candidate;
        }
        taken.insert(e.clip_id.clone());
        entries.push(e);
    }
    let name = if b.is_empty() {
        a.name.clone()
    } else if a.is_empty() {
        b.name.clone()
    } else {
        format!("{}+{}", a.name, b.name)
    };
    Manifest { name, entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FoldScheme {
    /// Use the manifest's `fold` column as given.
    ByColumn,
    /// All clips of one recordist share a fold; recordists are dealt to
    /// folds in sorted order.
    StratifiedByRecordist { k: usize },
    /// Seeded shuffle, then round-robin into `k` balanced folds.
    Random { k: usize, seed: u64 },
}

pub fn assign_folds(m: &Manifest, scheme: FoldScheme) -> Result<Manifest> {
    let mut out = m.clone();
    match scheme {
        FoldScheme::ByColumn => {
            if let Some(e) = m.entries.iter().find(|e| e.fold.is_none()) {
                return Err(Error::Config(format!(
                    "by-column folds requested but clip `{}` has no fold",
                    e.clip_id
                )));
            }
        }
        FoldScheme::StratifiedByRecordist { k } => {
            if k == 0 {
                return Err(Error::Config("fold count must be at least 1".into()));
            }
            let mut recordists = BTreeSet::new();
            for e in &m.entries {
                match &e.recordist {
                    Some(r) => {
                        recordists.insert(r.clone());
                    }
                    None => {
                        return Err(Error::Config(format!(
                            "stratified folds requested but clip `{}` has no recordist",
                            e.clip_id
                        )))
                    }
                }
            }
            let fold_of: HashMap<String, usize> =
                recordists.into_iter().enumerate().map(|(i, r)| (r, i % k)).collect();
            for e in &mut out.entries {
                e.fold = Some(fold_of[e.recordist.as_ref().expect("checked above")]);
            }
        }
        FoldScheme::Random { k, seed } => {
            if k == 0 {
                return Err(Error::Config("fold count must be at least 1".into()));
            }
            let mut order: Vec<usize> = (0..m.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            for (pos, idx) in order.into_iter().enumerate() {
                out.entries[idx].fold = Some(pos % k);
            }
        }
    }
    Ok(out)
}

/// Ordered set of label names, sorted lexicographically so that ordering
/// survives any save/load cycle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocabulary {
    pub fn from_names(names: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = names.into_iter().collect();
        let names: Vec<String> = set.into_iter().collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        LabelVocabulary { names, index }
    }

    pub fn union(&self, other: &LabelVocabulary) -> Self {
        Self::from_names(self.names.iter().chain(other.names.iter()).cloned())
    }

    pub fn intersection_len(&self, other: &LabelVocabulary) -> usize {
        self.names.iter().filter(|n| other.index.contains_key(*n)).count()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    /// Binary indicator row for a label set. Labels outside the vocabulary are ignored.
    pub fn indicator<'a>(&self, labels: impl IntoIterator<Item = &'a String>) -> Vec<bool> {
        let mut row = vec![false; self.len()];
        for l in labels {
            if let Some(i) = self.index_of(l) {
                row[i] = true;
            }
        }
        row
    }
}
