//! One-hidden-layer, 64-unit sweep on CIFAR-10 (binary version). Needs the
//! extracted `cifar-10-batches-bin` directory.
//!
//!     cargo run --release --example cifar10_sweep -- path/to/cifar-10-batches-bin [epochs] [out.csv]

use std::fs::File;

use mep_prune::dataset::load_cifar10_binary;
use mep_prune::harness::{
    run_experiment, write_results_csv, Architecture, ExperimentSpec, PipelineConfig,
};
use mep_prune::nn::TrainConfig;
use mep_prune::prune::Method;
use mep_prune::Error;

fn main() -> mep_prune::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next() else {
        eprintln!("usage: cifar10_sweep <cifar-10-batches-bin> [epochs] [out.csv]");
        std::process::exit(1);
    };
    let epochs = args
        .next()
        .map_or(30, |e| e.parse().expect("epochs must be an integer"));
    let out = args.next().unwrap_or_else(|| "cifar10_1x64.csv".into());

    let (train_set, test_set) = load_cifar10_binary(&dir)?;
    eprintln!(
        "loaded {} train / {} test images",
        train_set.len(),
        test_set.len()
    );
    let spec = ExperimentSpec {
        architectures: vec![Architecture::new(1, 64)],
        methods: Method::ALL.to_vec(),
        max_rates: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
        seeds: vec![0, 1, 2],
    };
    let cfg = PipelineConfig {
        train: TrainConfig {
            epochs,
            ..TrainConfig::default()
        },
        ..PipelineConfig::default()
    };
    let result = run_experiment(&spec, &cfg, &train_set, &test_set, |rows| {
        if let Some(r) = rows.first() {
            eprintln!(
                "seed {} done, unpruned test error {:.4}",
                r.seed, r.baseline_error
            );
        }
    })?;
    let file = File::create(&out).map_err(|e| Error::InvalidInput(format!("{out}: {e}")))?;
    write_results_csv(&result.records, file)?;
    println!("wrote {out}");
    Ok(())
}
