//! Compare every scoring method on one trained network across several
//! pruning rates.
//!
//!     cargo run --release --example baselines

use mep_prune::dataset::{make_synthetic, standardize};
use mep_prune::mi::{all_layer_mi, HistogramConfig};
use mep_prune::nn::{evaluate, train, TrainConfig};
use mep_prune::probe::{record_trace, ProbeConfig};
use mep_prune::prune::{prune, Method, ScoringInputs};

fn main() -> mep_prune::Result<()> {
    let (mut tr, mut te) = make_synthetic(10, 64, 400, 4.0, 5)?;
    standardize(&mut tr, &mut te);
    let net = train(
        &[64, 64, 10],
        &tr,
        &TrainConfig {
            epochs: 50,
            ..Default::default()
        },
    )?;
    println!("unpruned test error {:.4}", evaluate(&net, &te)?);

    let trace = record_trace(&net, &ProbeConfig::default())?;
    let mi = all_layer_mi(&trace, &HistogramConfig::default())?;
    let inputs = ScoringInputs {
        trace: Some(&trace),
        mi: Some(&mi),
    };

    let rates = [0.1, 0.3, 0.5, 0.7];
    print!("{:<18}", "method");
    for r in rates {
        print!("{r:>8}");
    }
    println!();
    for method in Method::ALL {
        print!("{:<18}", method.name());
        for r in rates {
            let out = prune(&net, method, r, inputs, 0)?;
            print!("{:>8.4}", evaluate(&out.network, &te)?);
        }
        println!();
    }
    Ok(())
}
