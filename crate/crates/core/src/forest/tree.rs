use std::io::{Read, Write};

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::binio::{LeReader, LeWriter};
use crate::error::{Error, Result};

/// Training targets for one tree.
#[derive(Clone, Copy)]
pub(crate) enum Targets<'a> {
    /// One class index per row; leaves hold class distributions.
    Classes { class: &'a [usize], n_classes: usize },
    /// Independent binary outputs; leaves hold positive frequencies and the
    /// criterion is Gini summed over outputs.
    Binary { y: ArrayView2<'a, bool> },
}

impl Targets<'_> {
    pub fn width(&self) -> usize {
        match self {
            Targets::Classes { n_classes, .. } => *n_classes,
            Targets::Binary { y } => y.ncols(),
        }
    }

    fn add(&self, counts: &mut [f64], row: usize, w: f64) {
        match self {
            Targets::Classes { class, .. } => counts[class[row]] += w,
            Targets::Binary { y } => {
                for (c, &pos) in counts.iter_mut().zip(y.row(row)) {
                    if pos {
                        *c += w;
                    }
                }
            }
        }
    }

    fn impurity(&self, counts: &[f64], total: f64) -> f64 {
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            Targets::Classes { .. } => 1.0 - counts.iter().map(|c| (c / total).powi(2)).sum::<f64>(),
            Targets::Binary { .. } => counts
                .iter()
                .map(|c| {
                    let p = c / total;
                    2.0 * p * (1.0 - p)
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tree {
    pub nodes: Vec<Node>,
    pub width: usize,
}

pub(crate) struct TreeSettings {
    pub max_features: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

struct Candidate {
    score: f64,
    gap: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.score != other.score {
            return self.score < other.score;
        }
        if self.gap != other.gap {
            return self.gap > other.gap;
        }
        self.feature < other.feature
    }
}

/// Midpoint that still separates `lo` from `hi` under `x <= t`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || !mid.is_finite() {
        lo
    } else {
        mid
    }
}

pub(crate) fn grow(x: ArrayView2<'_, f64>, targets: Targets<'_>, settings: &TreeSettings, rng: &mut ChaCha8Rng) -> Tree {
    let n = x.nrows();
    let width = targets.width();
    let mut weights = vec![0.0f64; n];
    if settings.bootstrap {
        for _ in 0..n {
            weights[rng.gen_range(0..n)] += 1.0;
        }
    } else {
        weights.fill(1.0);
    }
    let root: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();

    let mut nodes: Vec<Node> = Vec::new();
    // (node slot, rows)
    let mut stack = vec![(0usize, root)];
    nodes.push(Node::Leaf(Vec::new()));
    let mut features: Vec<usize> = (0..x.ncols()).collect();
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left_counts = vec![0.0; width];
    let mut right_counts = vec![0.0; width];

    while let Some((slot, rows)) = stack.pop() {
        let mut counts = vec![0.0; width];
        let mut total = 0.0;
        for &i in &rows {
            targets.add(&mut counts, i, weights[i]);
            total += weights[i];
        }
        let parent_impurity = targets.impurity(&counts, total);
        let leaf = || Node::Leaf(counts.iter().map(|c| c / total).collect());
        if parent_impurity <= 0.0 || rows.len() < 2 * settings.min_samples_leaf {
            nodes[slot] = leaf();
            continue;
        }

        features.shuffle(rng);
        let mut evaluated = 0;
        let mut best: Option<Candidate> = None;
        for &f in features.iter() {
            if evaluated == settings.max_features {
                break;
            }
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (x[[i, f]], i)));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if pairs[0].0 == pairs[pairs.len() - 1].0 {
                continue;
            }
            evaluated += 1;
            left_counts.fill(0.0);
            let mut left_total = 0.0;
            for j in 0..pairs.len() - 1 {
                let (v, i) = pairs[j];
                targets.add(&mut left_counts, i, weights[i]);
                left_total += weights[i];
                let next = pairs[j + 1].0;
                if v == next || j + 1 < settings.min_samples_leaf || pairs.len() - j - 1 < settings.min_samples_leaf {
                    continue;
                }
                for ((r, c), l) in right_counts.iter_mut().zip(&counts).zip(&left_counts) {
                    *r = c - l;
                }
                let right_total = total - left_total;
                let score = left_total * targets.impurity(&left_counts, left_total)
                    + right_total * targets.impurity(&right_counts, right_total);
                let cand = Candidate {
                    score,
                    gap: next - v,
                    feature: f,
                    threshold: midpoint(v, next),
                };
                if best.as_ref().map_or(true, |b| cand.beats(b)) {
                    best = Some(cand);
                }
            }
        }

        let Some(best) = best else {
            nodes[slot] = leaf();
            continue;
        };
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x[[i, best.feature]] <= best.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf(Vec::new()));
        let right = nodes.len();
        nodes.push(Node::Leaf(Vec::new()));
        nodes[slot] = Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: left as u32,
            right: right as u32,
        };
        stack.push((right, r_rows));
        stack.push((left, l_rows));
    }
    Tree { nodes, width }
}

impl Tree {
    pub fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut LeWriter<W>) -> Result<()> {
        w.u32(self.nodes.len() as u32)?;
        for node in &self.nodes {
            match node {
                Node::Split { feature, threshold, left, right } => {
                    w.u8(0)?;
                    w.u32(*feature)?;
                    w.f64(*threshold)?;
                    w.u32(*left)?;
                    w.u32(*right)?;
                }
                Node::Leaf(values) => {
                    w.u8(1)?;
                    w.f64s(values.iter().copied())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut LeReader<R>, width: usize, feature_dim: usize) -> Result<Self> {
        let n = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(n.min(1 << 20));
        for at in 0..n {
            let node = match r.u8()? {
                0 => {
                    let feature = r.u32()?;
                    let threshold = r.f64()?;
                    let left = r.u32()?;
                    let right = r.u32()?;
                    // children always follow their parent, which also rules out cycles
                    if feature as usize >= feature_dim || left as usize <= at || right as usize <= at
                        || left as usize >= n || right as usize >= n
                    {
                        return Err(Error::Format(format!("tree node {at} is malformed")));
                    }
                    Node::Split { feature, threshold, left, right }
                }
                1 => Node::Leaf(r.f64s(width)?),
                t => return Err(Error::Format(format!("unknown tree node tag {t}"))),
            };
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        Ok(Tree { nodes, width })
    }
}
