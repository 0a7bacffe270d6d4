//! Run a small architecture x method x rate x seed grid and write the
//! results CSV. Rows are printed as each (architecture, seed) unit finishes.
//!
//!     cargo run --release --example experiment_grid -- results.csv

use std::fs::File;

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::harness::{
    run_experiment, write_results_csv, Architecture, ExperimentSpec, PipelineConfig,
};
use mep_prune::nn::TrainConfig;
use mep_prune::prune::Method;
use mep_prune::Error;

fn main() -> mep_prune::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "results.csv".into());
    let (mut tr, mut te) = make_synthetic(10, 64, 400, 4.0, 0)?;
    standardize(&mut tr, &mut te);

    let spec = ExperimentSpec {
        architectures: vec![Architecture::new(1, 64), Architecture::new(2, 64)],
        methods: Method::ALL.to_vec(),
        max_rates: vec![0.1, 0.3, 0.5],
        seeds: vec![0, 1, 2],
    };
    let cfg = PipelineConfig {
        train: TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        },
        ..PipelineConfig::default()
    };
    let result = run_experiment(&spec, &cfg, &tr, &te, |rows| {
        if let Some(r) = rows.first() {
            eprintln!("finished {} seed {} ({} rows)", r.arch, r.seed, rows.len());
        }
    })?;
    for f in &result.failures {
        eprintln!("failed: {f:?}");
    }
    let file = File::create(&out).map_err(|e| Error::InvalidInput(format!("{out}: {e}")))?;
    write_results_csv(&result.records, file)?;

    for m in Method::ALL {
        let means: Vec<String> = spec
            .max_rates
            .iter()
            .map(|&r| format!("{:.4}", result.mean_error(m, r).unwrap_or(f64::NAN)))
            .collect();
        println!("{:<18} {}", m.name(), means.join("  "));
    }
    println!("wrote {out}");
    Ok(())
}
