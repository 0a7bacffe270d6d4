//! Train a small ReLU network on Gaussian blobs, report its error and
//! round-trip it through the model file.
//!
//!     cargo run --release --example train_and_evaluate

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::nn::{evaluate, load_model, save_model, train, TrainConfig};

fn main() -> mep_prune::Result<()> {
    let (mut train_set, mut test_set) = make_synthetic(10, 32, 300, 5.0, 1)?;
    standardize(&mut train_set, &mut test_set);

    let cfg = TrainConfig {
        epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let net = train(&[32, 64, 64, 10], &train_set, &cfg)?;
    println!(
        "{} parameters, train error {:.4}, test error {:.4}",
        net.num_parameters(),
        evaluate(&net, &train_set)?,
        evaluate(&net, &test_set)?
    );

    let dir = std::env::temp_dir().join("mep-prune-example");
    std::fs::create_dir_all(&dir).map_err(|e| mep_prune::Error::InvalidInput(e.to_string()))?;
    let path = dir.join("model.mipr");
    save_model(&net, &path)?;
    let back = load_model(&path)?;
    assert_eq!(back, net);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
