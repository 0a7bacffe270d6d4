//! Score hidden neurons by summed mutual information and prune a two-hidden-
//! layer network with the linear depth schedule.
//!
//!     cargo run --release --example prune_with_mi

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::mi::{all_layer_mi, HistogramConfig};
use mep_prune::nn::{evaluate, train, TrainConfig};
use mep_prune::probe::{record_trace, ProbeConfig};
use mep_prune::prune::{prune, schedule, Method, ScoringInputs};

fn main() -> mep_prune::Result<()> {
    let (mut tr, mut te) = make_synthetic(10, 64, 400, 4.0, 0)?;
    standardize(&mut tr, &mut te);
    let net = train(
        &[64, 128, 128, 10],
        &tr,
        &TrainConfig {
            epochs: 40,
            ..Default::default()
        },
    )?;
    println!(
        "unpruned: widths {:?}, test error {:.4}",
        net.hidden_widths(),
        evaluate(&net, &te)?
    );

    let trace = record_trace(&net, &ProbeConfig::default())?;
    let mi = all_layer_mi(&trace, &HistogramConfig::default())?;
    let inputs = ScoringInputs {
        trace: Some(&trace),
        mi: Some(&mi),
    };

    for max_rate in [0.1, 0.3, 0.5, 0.7] {
        let out = prune(&net, Method::Mi, max_rate, inputs, 0)?;
        println!(
            "max rate {max_rate}: schedule {:?}, widths {:?}, test error {:.4}",
            schedule(max_rate, net.num_hidden())?,
            out.network.hidden_widths(),
            evaluate(&out.network, &te)?
        );
    }

    let out = prune(&net, Method::Mi, 0.3, inputs, 0)?;
    print!("plan at 0.3:\n{}", out.plan.to_text());
    Ok(())
}
