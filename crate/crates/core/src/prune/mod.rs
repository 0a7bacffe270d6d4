//! Neuron scoring, depth-wise pruning schedule and structural surgery.
//!
//! Only hidden layers `1..L-1` are ever pruned; the input features and the
//! output logits keep their width. Lower scores are removed first.

mod plan;
mod scores;
mod surgery;

use std::fmt;
use std::str::FromStr;

pub use plan::{make_plan, removal_count, PrunePlan};
pub use scores::{
    magnitude_layer_scores, mi_layer_scores, score_correlation, score_magnitude,
    score_magnitude_with, score_mi, score_random, score_weight_similarity, write_scores_csv,
    MagnitudeBasis, NeuronScore, Scores,
};
pub use surgery::apply_plan;

use crate::mi::MIMatrix;
use crate::nn::Network;
use crate::probe::ActivationTrace;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Summed input-output mutual information under the Gaussian probe.
    Mi,
    /// L2 norm of incoming weights.
    Magnitude,
    Random,
    /// Redundancy by activation correlation.
    Correlation,
    /// Weight-similarity saliency.
    WeightSimilarity,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Mi,
        Method::Magnitude,
        Method::Random,
        Method::Correlation,
        Method::WeightSimilarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mi => "mi",
            Method::Magnitude => "magnitude",
            Method::Random => "random",
            Method::Correlation => "correlation",
            Method::WeightSimilarity => "weight-similarity",
        }
    }

    pub fn needs_trace(self) -> bool {
        matches!(self, Method::Correlation)
    }

    pub fn needs_mi(self) -> bool {
        matches!(self, Method::Mi)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mi" => Ok(Method::Mi),
            "magnitude" => Ok(Method::Magnitude),
            "random" => Ok(Method::Random),
            "correlation" | "cop" => Ok(Method::Correlation),
            "weight-similarity" | "dfp" => Ok(Method::WeightSimilarity),
            other => Err(format!(
                "unknown method {other:?} (mi|magnitude|random|correlation|weight-similarity)"
            )),
        }
    }
}

/// Per-hidden-layer pruning rates growing linearly with depth:
/// `rate[h] = max_rate * h / num_hidden` for `h = 1..=num_hidden`; the
/// deepest hidden layer gets exactly `max_rate`.
pub fn schedule(max_rate: f64, num_hidden: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&max_rate) {
        return Err(Error::InvalidConfig(format!(
            "pruning rate must be in [0, 1], got {max_rate}"
        )));
    }
    if num_hidden == 0 {
        return Err(Error::InvalidConfig(
            "network has no hidden layer to prune".into(),
        ));
    }
    Ok((1..=num_hidden)
        .map(|h| max_rate * (h as f64 / num_hidden as f64))
        .collect())
}

/// Caches a scorer may need besides the network itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoringInputs<'a> {
    pub trace: Option<&'a ActivationTrace>,
    pub mi: Option<&'a [MIMatrix]>,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub network: Network,
    pub plan: PrunePlan,
    pub scores: Scores,
}

/// Scores hidden neurons with `method`, removes the lowest-scored ones under
/// the linear schedule and returns the smaller network.
///
/// For [`Method::Mi`] layers are handled shallow to deep: the MI rows of
/// neurons already removed from layer `h-1` are zeroed before layer `h` is
/// scored.
pub fn prune(
    net: &Network,
    method: Method,
    max_rate: f64,
    inputs: ScoringInputs<'_>,
    seed: u64,
) -> Result<PruneOutcome> {
    let rates = schedule(max_rate, net.num_hidden())?;
    let (plan, per_layer) = match method {
        Method::Mi => {
            let mi = inputs
                .mi
                .ok_or_else(|| Error::InvalidInput("MI scoring needs an MI cache".into()))?;
            check_mi_shapes(net, mi)?;
            plan_mi(&mi[..net.num_hidden()], &rates)?
        }
        _ => {
            let per_layer = match method {
                Method::Magnitude => score_magnitude(net),
                Method::Random => score_random(net, seed),
                Method::WeightSimilarity => score_weight_similarity(net),
                Method::Correlation => {
                    let trace = inputs.trace.ok_or_else(|| {
                        Error::InvalidInput("correlation scoring needs an activation trace".into())
                    })?;
                    check_trace_shapes(net, trace)?;
                    score_correlation(trace)
                }
                Method::Mi => unreachable!(),
            };
            (make_plan(&per_layer, &rates)?, per_layer)
        }
    };
    let network = apply_plan(net, &plan)?;
    Ok(PruneOutcome {
        network,
        plan,
        scores: Scores { method, per_layer },
    })
}

/// Sequential MI scoring and planning over hidden layers.
pub fn plan_mi(mi: &[MIMatrix], rates: &[f64]) -> Result<(PrunePlan, Vec<Vec<f64>>)> {
    if mi.len() != rates.len() {
        return Err(Error::InvalidInput(format!(
            "{} MI matrices for {} hidden layers",
            mi.len(),
            rates.len()
        )));
    }
    let mut keep = vec![true; mi.first().map_or(0, MIMatrix::rows)];
    let mut removals = Vec::with_capacity(mi.len());
    let mut scores = Vec::with_capacity(mi.len());
    for (h, (m, &rate)) in mi.iter().zip(rates).enumerate() {
        let layer_scores = mi_layer_scores(m, Some(&keep))?;
        let step = make_plan(std::slice::from_ref(&layer_scores), &[rate])
            .map_err(|e| relabel_layer(e, h + 1))?;
        let removed = step.removals.into_iter().next().unwrap_or_default();
        keep = vec![true; m.cols()];
        for &r in &removed {
            keep[r] = false;
        }
        removals.push(removed);
        scores.push(layer_scores);
    }
    Ok((
        PrunePlan {
            per_layer_rate: rates.to_vec(),
            removals,
        },
        scores,
    ))
}

fn relabel_layer(e: Error, layer: usize) -> Error {
    match e {
        Error::LayerEmptied { width, .. } => Error::LayerEmptied { layer, width },
        other => other,
    }
}

pub(crate) fn check_mi_shapes(net: &Network, mi: &[MIMatrix]) -> Result<()> {
    let dims = net.dims();
    if mi.len() != net.depth() {
        return Err(Error::InvalidInput(format!(
            "MI cache has {} layers, network has {}",
            mi.len(),
            net.depth()
        )));
    }
    for (k, m) in mi.iter().enumerate() {
        if m.rows() != dims[k] || m.cols() != dims[k + 1] {
            return Err(Error::InvalidInput(format!(
                "MI layer {} is {}x{}, network layer is {}x{}",
                k + 1,
                m.rows(),
                m.cols(),
                dims[k],
                dims[k + 1]
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_trace_shapes(net: &Network, trace: &ActivationTrace) -> Result<()> {
    if trace.dims() != net.dims() {
        return Err(Error::InvalidInput(format!(
            "trace layer widths {:?} do not match network {:?}",
            trace.dims(),
            net.dims()
        )));
    }
    Ok(())
}
