//! Walk through the on-disk artifacts: model, trace cache, MI cache, prune
//! plan and score CSV, as produced by the CLI subcommands.
//!
//!     cargo run --release --example model_files

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::mi::{load_mi, save_mi, HistogramConfig, MiCache};
use mep_prune::nn::{load_model, model_to_bytes, save_model, train, TrainConfig};
use mep_prune::probe::{load_trace, record_trace, save_trace, ProbeConfig};
use mep_prune::prune::{prune, write_scores_csv, Method, PrunePlan, ScoringInputs};

fn main() -> mep_prune::Result<()> {
    let dir = std::env::temp_dir().join("mep-prune-files");
    std::fs::create_dir_all(&dir).map_err(|e| mep_prune::Error::InvalidInput(e.to_string()))?;

    let (mut tr, mut te) = make_synthetic(3, 6, 50, 4.0, 0)?;
    standardize(&mut tr, &mut te);
    let net = train(
        &[6, 8, 3],
        &tr,
        &TrainConfig {
            epochs: 10,
            ..Default::default()
        },
    )?;
    let model_path = dir.join("model.bin");
    save_model(&net, &model_path)?;
    let bytes = model_to_bytes(&net);
    println!(
        "model: {} bytes, header {:?}",
        bytes.len(),
        String::from_utf8_lossy(&bytes[..4])
    );

    let trace = record_trace(
        &net,
        &ProbeConfig {
            num_samples: 1000,
            ..Default::default()
        },
    )?;
    let trace_path = dir.join("trace.bin");
    save_trace(&trace, &trace_path)?;
    let trace = load_trace(&trace_path)?;
    println!(
        "trace: {} samples, layer dims {:?}",
        trace.num_samples(),
        trace.dims()
    );

    let cache = MiCache::compute(&trace, &HistogramConfig::default())?;
    let mi_path = dir.join("mi.bin");
    save_mi(&cache, &mi_path)?;
    let cache = load_mi(&mi_path)?;
    println!(
        "mi cache: B = {}, S = {}, {} matrices",
        cache.bins,
        cache.samples,
        cache.layers.len()
    );

    let inputs = ScoringInputs {
        trace: Some(&trace),
        mi: Some(&cache.layers),
    };
    let out = prune(&load_model(&model_path)?, Method::Mi, 0.5, inputs, 0)?;
    let text = out.plan.to_text();
    print!("plan:\n{text}");
    assert_eq!(PrunePlan::from_text(&text).unwrap(), out.plan);

    println!("scores:");
    write_scores_csv(&[out.scores], std::io::stdout().lock())
}
