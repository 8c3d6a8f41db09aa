//! Window pooling, AUC and MAP on a hand-made prediction matrix.

use std::collections::{BTreeSet, HashMap};

use birdsong::dataset::LabelVocabulary;
use birdsong::evaluate::{auc, average_precision, mean_average_precision, pool_decisions, PoolMode};
use birdsong::forest::{PredictionMatrix, RowKey};
use ndarray::array;

fn main() -> birdsong::Result<()> {
    println!("AUC with one tie: {:.3}", auc(&[0.9, 0.4, 0.4, 0.1], &[true, true, false, false])?);
    println!("AP of ranking [hit, miss, hit]: {:.4}", average_precision(&[0.9, 0.5, 0.2], &[true, false, true]).unwrap());

    let vocab = LabelVocabulary::from_names(["a", "b"].map(String::from));
    let key = |c: &str, w| RowKey { clip_id: c.into(), window_index: w };
    let windows = PredictionMatrix::new(
        vec![key("x", 0), key("x", 1), key("y", 0)],
        vocab,
        array![[0.2, 0.7], [0.8, 0.1], [0.3, 0.6]],
    )?;
    let truth: HashMap<String, BTreeSet<String>> =
        [("x", "a"), ("y", "b")].iter().map(|(c, l)| (c.to_string(), BTreeSet::from([l.to_string()]))).collect();
    for pool in [PoolMode::Mean, PoolMode::Max] {
        let clips = pool_decisions(&windows, pool);
        let m = mean_average_precision(&clips, &truth)?;
        println!("{pool} pooling: clip scores {:?}, MAP {:.3}", clips.values.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(), m.map);
    }
    Ok(())
}
