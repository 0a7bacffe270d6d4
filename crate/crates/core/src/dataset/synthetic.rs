use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Split};
use crate::rng;
use crate::{Error, Result};

/// Gaussian blobs with unit covariance.
///
/// Class `k` is centred at `separation / sqrt(2) * e_k`, so every pair of class
/// means is exactly `separation` apart. Each class contributes its first 80%
/// of samples to the train split and the rest to test; both splits are then
/// shuffled.
pub fn make_synthetic(
    num_classes: usize,
    dim: usize,
    samples_per_class: usize,
    separation: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if num_classes == 0 || dim < num_classes {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= num_classes <= dim, got {num_classes} classes in {dim} dims"
        )));
    }
    if samples_per_class < 5 {
        return Err(Error::InvalidConfig(
            "need at least 5 samples per class for an 80/20 split".into(),
        ));
    }
    if !(separation.is_finite() && separation >= 0.0) {
        return Err(Error::InvalidConfig(format!("bad separation {separation}")));
    }
    let mut rng = rng::stream(seed, rng::SYNTHETIC);
    let offset = separation / std::f64::consts::SQRT_2;
    let n_train = samples_per_class * 4 / 5;

    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..num_classes {
        for i in 0..samples_per_class {
            let x: Vec<f32> = (0..dim)
                .map(|d| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (z + if d == class { offset } else { 0.0 }) as f32
                })
                .collect();
            if i < n_train {
                train.push((x, class as u32));
            } else {
                test.push((x, class as u32));
            }
        }
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);

    let build = |rows: Vec<(Vec<f32>, u32)>, split| {
        let labels = rows.iter().map(|r| r.1).collect();
        let features = rows.into_iter().flat_map(|r| r.0).collect();
        Dataset::new(features, dim, labels, num_classes, split)
    };
    Ok((build(train, Split::Train)?, build(test, Split::Test)?))
}
