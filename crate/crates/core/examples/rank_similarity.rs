//! How closely do MI scores rank neurons like weight magnitude does? Trains
//! three seeds and prints the per-layer Spearman and Kendall report.
//!
//!     cargo run --release --example rank_similarity

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::harness::{rank_similarity_report, write_rank_report_csv};
use mep_prune::mi::{all_layer_mi, HistogramConfig, MIMatrix};
use mep_prune::nn::{train, Network, TrainConfig};
use mep_prune::probe::{record_trace, ProbeConfig};

fn main() -> mep_prune::Result<()> {
    let (mut tr, mut te) = make_synthetic(10, 64, 400, 4.0, 0)?;
    standardize(&mut tr, &mut te);

    let mut runs: Vec<(Network, Vec<MIMatrix>)> = Vec::new();
    for seed in 0..3 {
        let net = train(
            &[64, 64, 64, 10],
            &tr,
            &TrainConfig {
                epochs: 30,
                seed,
                ..Default::default()
            },
        )?;
        let trace = record_trace(
            &net,
            &ProbeConfig {
                seed,
                ..Default::default()
            },
        )?;
        let mi = all_layer_mi(&trace, &HistogramConfig::default())?;
        runs.push((net, mi));
    }
    let refs: Vec<(&Network, &[MIMatrix])> = runs.iter().map(|(n, m)| (n, m.as_slice())).collect();
    let rows = rank_similarity_report(&refs)?;
    write_rank_report_csv(&rows, std::io::stdout().lock())
}
