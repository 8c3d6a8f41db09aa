use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditStage {
    FeatureLearning,
    Training,
    Testing,
}

impl fmt::Display for AuditStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            AuditStage::FeatureLearning => "feature-learning",
            AuditStage::Training => "training",
            AuditStage::Testing => "testing",
        })
    }
}

/// Which clips one stage of one fold consumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub run: String,
    pub fold: usize,
    pub stage: AuditStage,
    pub clip_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leak {
    pub run: String,
    pub fold: usize,
    pub stage: AuditStage,
    pub clip_ids: BTreeSet<String>,
}

/// Thread-safe record of the clips consumed by feature learning, training
/// and testing in every fold of every run.
#[derive(Debug, Default)]
pub struct AuditLog {
    records: Mutex<Vec<AuditRecord>>,
}

impl AuditLog {
    pub fn new() -> Self {
        AuditLog::default()
    }

    pub fn record<'a>(&self, run: &str, fold: usize, stage: AuditStage, clips: impl IntoIterator<Item = &'a str>) {
        let rec = AuditRecord {
            run: run.to_string(),
            fold,
            stage,
            clip_ids: clips.into_iter().map(str::to_string).collect(),
        };
        self.records.lock().expect("audit lock").push(rec);
    }

    /// Records sorted by run, fold and stage.
    pub fn records(&self) -> Vec<AuditRecord> {
        let mut r = self.records.lock().expect("audit lock").clone();
        r.sort_by(|a, b| (&a.run, a.fold, a.stage).cmp(&(&b.run, b.fold, b.stage)));
        r
    }

    pub fn clear(&self) {
        self.records.lock().expect("audit lock").clear();
    }

    /// Test clips that were also consumed by feature learning or training
    /// in the same (run, fold).
    pub fn leaks(&self) -> Vec<Leak> {
        let mut by_fold: BTreeMap<(String, usize), BTreeMap<AuditStage, BTreeSet<String>>> = BTreeMap::new();
        for r in self.records() {
            by_fold
                .entry((r.run, r.fold))
                .or_default()
                .entry(r.stage)
                .or_default()
                .extend(r.clip_ids);
        }
        let mut leaks = Vec::new();
        for ((run, fold), stages) in by_fold {
            let Some(test) = stages.get(&AuditStage::Testing) else { continue };
            for stage in [AuditStage::FeatureLearning, AuditStage::Training] {
                if let Some(used) = stages.get(&stage) {
                    let overlap: BTreeSet<String> = used.intersection(test).cloned().collect();
                    if !overlap.is_empty() {
                        leaks.push(Leak { run: run.clone(), fold, stage, clip_ids: overlap });
                    }
                }
            }
        }
        leaks
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.records())
    }
}
