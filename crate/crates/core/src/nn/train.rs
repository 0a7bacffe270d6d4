//! Mini-batch training with softmax cross-entropy and Adam with decoupled
//! weight decay.
//!
//! Parameters are trained in `f64` master copies and rounded to `f32` once, at
//! the end, when the [`Network`] is rebuilt.

use rand::seq::SliceRandom;

use super::{Activation, LinearLayer, Network};
use crate::dataset::Dataset;
use crate::matrix::Matrix;
use crate::rng;
use crate::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;
const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub initial_lr: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay_gamma: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            initial_lr: 1e-3,
            lr_decay_gamma: 0.99,
            weight_decay: 1e-4,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.initial_lr
            ));
        }
        if !(self.lr_decay_gamma > 0.0 && self.lr_decay_gamma <= 1.0) {
            return bad(format!(
                "lr decay must be in (0, 1], got {}",
                self.lr_decay_gamma
            ));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            ));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DenseParams {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub activation: Activation,
}

/// `f64` working copy of a network's parameters.
#[derive(Debug, Clone)]
pub(crate) struct Params {
    pub layers: Vec<DenseParams>,
}

impl Params {
    pub fn from_network(net: &Network) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| DenseParams {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                w: l.weights().iter().map(|&v| v as f64).collect(),
                b: l.bias().iter().map(|&v| v as f64).collect(),
                activation: l.activation(),
            })
            .collect();
        Self { layers }
    }

    pub fn to_network(&self, input_dim: usize) -> Result<Network> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                LinearLayer::new(
                    l.in_dim,
                    l.out_dim,
                    l.w.iter().map(|&v| v as f32).collect(),
                    l.b.iter().map(|&v| v as f32).collect(),
                    l.activation,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(input_dim, layers)
    }

    fn zeros_like(&self) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| DenseParams {
                w: vec![0.0; l.w.len()],
                b: vec![0.0; l.b.len()],
                ..l.clone()
            })
            .collect();
        Self { layers }
    }

    fn slices_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w, &mut l.b].into_iter())
    }

    /// Mean softmax cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(&self, x: &Matrix, labels: &[u32]) -> (f64, Params) {
        let n = x.rows();
        let mut pre: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let input = post.last().unwrap_or(x);
            let mut z = Matrix::zeros(n, l.out_dim);
            for r in 0..n {
                let xr = input.row(r);
                let zr = z.row_mut(r);
                for m in 0..l.out_dim {
                    let w = &l.w[m * l.in_dim..(m + 1) * l.in_dim];
                    zr[m] = l.b[m] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            let mut a = z.clone();
            if l.activation == Activation::Relu {
                for r in 0..n {
                    a.row_mut(r).iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            pre.push(z);
            post.push(a);
        }

        // Softmax cross-entropy on the final outputs.
        let logits = post.last().expect("at least one layer");
        let k = logits.cols();
        let mut delta = Matrix::zeros(n, k);
        let mut loss = 0.0;
        for r in 0..n {
            let row = logits.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let log_z = max + sum.ln();
            let y = labels[r] as usize;
            loss += log_z - row[y];
            let d = delta.row_mut(r);
            for (c, dv) in d.iter_mut().enumerate() {
                let p = (row[c] - log_z).exp();
                *dv = (p - if c == y { 1.0 } else { 0.0 }) / n as f64;
            }
        }
        loss /= n as f64;

        let mut grads = self.zeros_like();
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let input = if li == 0 { x } else { &post[li - 1] };
            if l.activation == Activation::Relu {
                for r in 0..n {
                    let z = pre[li].row(r);
                    for (dv, zv) in delta.row_mut(r).iter_mut().zip(z) {
                        if *zv <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                }
            }
            let g = &mut grads.layers[li];
            for r in 0..n {
                let d = delta.row(r);
                let xr = input.row(r);
                for m in 0..l.out_dim {
                    let dm = d[m];
                    if dm == 0.0 {
                        continue;
                    }
                    g.b[m] += dm;
                    let gw = &mut g.w[m * l.in_dim..(m + 1) * l.in_dim];
                    for (gv, xv) in gw.iter_mut().zip(xr) {
                        *gv += dm * xv;
                    }
                }
            }
            if li > 0 {
                let mut next = Matrix::zeros(n, l.in_dim);
                for r in 0..n {
                    let d = delta.row(r);
                    let out = next.row_mut(r);
                    for m in 0..l.out_dim {
                        let dm = d[m];
                        if dm == 0.0 {
                            continue;
                        }
                        let w = &l.w[m * l.in_dim..(m + 1) * l.in_dim];
                        for (o, wv) in out.iter_mut().zip(w) {
                            *o += dm * wv;
                        }
                    }
                }
                delta = next;
            }
        }
        (loss, grads)
    }
}

struct Adam {
    m: Params,
    v: Params,
    t: i32,
}

impl Adam {
    fn new(p: &Params) -> Self {
        Self {
            m: p.zeros_like(),
            v: p.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Params, grads: &mut Params, lr: f64, weight_decay: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let slices = params
            .slices_mut()
            .zip(grads.slices_mut())
            .zip(self.m.slices_mut().zip(self.v.slices_mut()));
        for ((p, g), (m, v)) in slices {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                let update = (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
                p[i] -= lr * (update + weight_decay * p[i]);
            }
        }
    }
}

/// Trains an MLP with layer sizes `arch = [input, hidden.., classes]`.
///
/// Deterministic in `cfg.seed`: the same seed reproduces the initialization,
/// the shuffling order and therefore the final weights bit for bit.
pub fn train(arch: &[usize], data: &Dataset, cfg: &TrainConfig) -> Result<Network> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if arch.first() != Some(&data.dim()) {
        return Err(Error::InvalidConfig(format!(
            "architecture {arch:?} does not start with the data dimension {}",
            data.dim()
        )));
    }
    let classes = *arch.last().expect("checked nonempty");
    if let Some(&bad) = data.labels().iter().find(|&&l| l as usize >= classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} does not fit an output layer of {classes}"
        )));
    }
    let init = Network::init(arch, cfg.seed)?;
    if cfg.epochs == 0 {
        return Ok(init);
    }

    let mut params = Params::from_network(&init);
    let mut adam = Adam::new(&params);
    let mut shuffle = rng::stream(cfg.seed, rng::SHUFFLE);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut labels = Vec::with_capacity(cfg.batch_size);
    let mut lr = cfg.initial_lr;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle);
        for chunk in order.chunks(cfg.batch_size) {
            let x = data.batch(chunk);
            labels.clear();
            labels.extend(chunk.iter().map(|&i| data.labels()[i]));
            let (loss, mut grads) = params.loss_and_grad(&x, &labels);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            adam.step(&mut params, &mut grads, lr, cfg.weight_decay);
        }
        lr *= cfg.lr_decay_gamma;
    }
    params.to_network(data.dim())
}

/// Fraction of samples whose argmax logit differs from the label. Ties go to
/// the lowest class index.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("evaluation set is empty".into()));
    }
    if data.dim() != net.input_dim() {
        return Err(Error::Shape {
            layer: 1,
            expected: net.input_dim(),
            found: data.dim(),
        });
    }
    let mut wrong = 0usize;
    let mut start = 0;
    while start < data.len() {
        let end = (start + EVAL_CHUNK).min(data.len());
        let logits = net.logits(&data.range(start, end))?;
        for r in 0..logits.rows() {
            if argmax(logits.row(r)) != data.labels()[start + r] as usize {
                wrong += 1;
            }
        }
        start = end;
    }
    Ok(wrong as f64 / data.len() as f64)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}
