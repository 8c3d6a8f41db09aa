//! Spherical k-means on 2-D points from three angular clusters: the learned
//! bases are unit vectors pointing at the cluster directions.

use birdsong::featlearn::{skmeans_learn, SkmParams};
use birdsong::{DimMeaning, FeatureSeries};
use ndarray::Array2;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn main() -> birdsong::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let centres_deg = [30.0f64, 150.0, 260.0];
    let jitter = Normal::new(0.0, 5f64.to_radians()).unwrap();
    let n = 1500;
    let mut points = Array2::zeros((n, 2));
    for i in 0..n {
        let theta = centres_deg[i % 3].to_radians() + jitter.sample(&mut rng);
        let r = 0.5 + (i % 7) as f64 * 0.2;
        points[[i, 0]] = r * theta.cos();
        points[[i, 1]] = r * theta.sin();
    }
    let data = vec![FeatureSeries::new(points, DimMeaning::Summary, 1)];
    let params = SkmParams { k: 10, sample_size: n, whiten: false, ..SkmParams::default() };
    let cb = skmeans_learn(&data, &params, 1)?;
    for (i, b) in cb.bases().rows().into_iter().enumerate() {
        let deg = b[1].atan2(b[0]).to_degrees().rem_euclid(360.0);
        println!("base {i}: {deg:6.1} deg, norm {:.6}, {} assignments", b.dot(&b).sqrt(), cb.counts()[i]);
    }
    Ok(())
}
