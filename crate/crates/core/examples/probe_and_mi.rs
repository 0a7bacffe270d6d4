//! Probe a trained network with Gaussian noise and look at the estimated
//! mutual information between adjacent layers.
//!
//!     cargo run --release --example probe_and_mi

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::mi::{all_layer_mi, HistogramConfig};
use mep_prune::nn::{train, TrainConfig};
use mep_prune::probe::{record_trace, Normalization, ProbeConfig};

fn main() -> mep_prune::Result<()> {
    let (mut tr, mut te) = make_synthetic(4, 8, 200, 4.0, 3)?;
    standardize(&mut tr, &mut te);
    let net = train(
        &[8, 16, 8, 4],
        &tr,
        &TrainConfig {
            epochs: 20,
            ..Default::default()
        },
    )?;

    for normalization in [Normalization::PerNeuron, Normalization::PerLayer] {
        let probe = ProbeConfig {
            num_samples: 5000,
            seed: 0,
            normalization,
        };
        let trace = record_trace(&net, &probe)?;
        let mi = all_layer_mi(&trace, &HistogramConfig::default())?;
        println!("{normalization:?}:");
        for (i, m) in mi.iter().enumerate() {
            let dead = trace.constant_flags(i + 1).iter().filter(|&&c| c).count();
            let total: f64 = m.values().iter().sum();
            let max = m.values().iter().cloned().fold(0.0, f64::max);
            println!(
                "  layer {}: {}x{} pairs, mean MI {:.4} nats, max {:.4}, {} constant outputs",
                m.layer(),
                m.rows(),
                m.cols(),
                total / m.values().len() as f64,
                max,
                dead
            );
        }
    }
    Ok(())
}
