//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use mep_prune::nn::{Activation, LinearLayer, Network};
use mep_prune::prune::PrunePlan;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plug-in MI by explicit probability tables and a double loop.
pub fn oracle_mi(x: &[f64], y: &[f64], bins: usize) -> f64 {
    let bin = |v: f64| ((v * bins as f64).floor() as usize).min(bins - 1);
    let s = x.len() as f64;
    let mut joint = vec![vec![0.0f64; bins]; bins];
    for i in 0..x.len() {
        joint[bin(x[i])][bin(y[i])] += 1.0 / s;
    }
    let px: Vec<f64> = (0..bins)
        .map(|u| (0..bins).map(|v| joint[u][v]).sum())
        .collect();
    let py: Vec<f64> = (0..bins)
        .map(|v| (0..bins).map(|u| joint[u][v]).sum())
        .collect();
    let mut mi = 0.0;
    for u in 0..bins {
        for v in 0..bins {
            let p = joint[u][v];
            if p > 0.0 {
                mi += p * (p / (px[u] * py[v])).ln();
            }
        }
    }
    mi.max(0.0)
}

pub fn oracle_entropy(x: &[f64], bins: usize) -> f64 {
    let s = x.len() as f64;
    let mut p = vec![0.0f64; bins];
    for &v in x {
        p[((v * bins as f64).floor() as usize).min(bins - 1)] += 1.0 / s;
    }
    p.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum()
}

/// `[0, 1]` sample that hits the edges 0 and 1 now and then.
pub fn unit_value(rng: &mut ChaCha8Rng) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random::<f64>(),
    }
}

/// ReLU MLP with random weights and biases.
pub fn random_network(rng: &mut ChaCha8Rng, dims: &[usize]) -> Network {
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, d)| {
            let w = (0..d[0] * d[1])
                .map(|_| rng.random_range(-1.0f32..1.0))
                .collect();
            let b = (0..d[1]).map(|_| rng.random_range(-0.5f32..0.5)).collect();
            let act = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            LinearLayer::new(d[0], d[1], w, b, act).unwrap()
        })
        .collect();
    Network::new(dims[0], layers).unwrap()
}

/// Random plan that leaves at least one neuron per hidden layer.
pub fn random_plan(rng: &mut ChaCha8Rng, hidden: &[usize]) -> PrunePlan {
    let removals = hidden
        .iter()
        .map(|&w| {
            let k = rng.random_range(0..w);
            let mut idx: Vec<usize> = (0..w).collect();
            for i in 0..k {
                let j = rng.random_range(i..w);
                idx.swap(i, j);
            }
            let mut chosen = idx[..k].to_vec();
            chosen.sort_unstable();
            chosen
        })
        .collect::<Vec<_>>();
    PrunePlan {
        per_layer_rate: removals
            .iter()
            .zip(hidden)
            .map(|(r, &w)| r.len() as f64 / w as f64)
            .collect(),
        removals,
    }
}

/// Forward pass of the unpruned network with removed hidden neurons forced to
/// zero after their activation.
pub fn masked_forward(net: &Network, plan: &PrunePlan, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    for (li, layer) in net.layers().iter().enumerate() {
        let mut next = vec![0.0; layer.out_dim()];
        for (m, out) in next.iter_mut().enumerate() {
            let mut z = layer.bias()[m] as f64;
            for n in 0..layer.in_dim() {
                z += layer.weight(m, n) as f64 * a[n];
            }
            *out = match layer.activation() {
                Activation::Relu => z.max(0.0),
                Activation::Identity => z,
            };
        }
        if let Some(removed) = plan.removals.get(li) {
            for &r in removed {
                next[r] = 0.0;
            }
        }
        a = next;
    }
    a
}

/// Plain forward pass over one sample.
pub fn plain_forward(net: &Network, x: &[f64]) -> Vec<f64> {
    let empty = PrunePlan {
        per_layer_rate: Vec::new(),
        removals: Vec::new(),
    };
    masked_forward(net, &empty, x)
}
