//! The random forest in its three label modes on a toy multilabel problem.

use birdsong::dataset::LabelVocabulary;
use birdsong::forest::{train, ClassifierMode, ForestParams};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};

fn main() -> birdsong::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let vocab = LabelVocabulary::from_names(["owl", "wren", "tit"].map(String::from));
    let n = 300;
    // label j present when feature j is large
    let x = Array2::from_shape_fn((n, 5), |_| rng.gen::<f64>());
    let multi = x.mapv(|v| v > 0.6).slice_move(ndarray::s![.., 0..3]);
    // single-label target: the largest of the first three features
    let mut single = Array2::from_elem((n, 3), false);
    for (i, row) in x.rows().into_iter().enumerate() {
        let j = (0..3).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        single[[i, j]] = true;
    }
    let params = ForestParams { n_trees: 50, ..ForestParams::default() };
    let probe = array![[0.9, 0.1, 0.8, 0.5, 0.5]];
    for mode in ClassifierMode::ALL {
        let y = if mode == ClassifierMode::SingleLabel { &single } else { &multi };
        let model = train(x.view(), y.view(), &vocab, mode, &params)?;
        let p = model.probabilities(probe.view())?;
        println!("{mode:>16}: {} forest(s), P(owl, wren, tit) = {:.2}", model.n_forests(), p.row(0));
    }
    Ok(())
}
