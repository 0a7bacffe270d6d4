use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::matrix::Matrix;
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Dense affine layer followed by an element-wise activation.
///
/// Weights are row-major with shape `(out_dim, in_dim)`: row `m` holds the
/// incoming weights of output neuron `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f32>,
    bias: Vec<f32>,
    activation: Activation,
}

impl LinearLayer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer dimensions must be positive, got {out_dim}x{in_dim}"
            )));
        }
        if weights.len() != in_dim * out_dim || bias.len() != out_dim {
            return Err(Error::InvalidConfig(format!(
                "layer {out_dim}x{in_dim} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite layer parameter".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    #[inline]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    #[inline]
    pub fn weight(&self, out: usize, inp: usize) -> f32 {
        self.weights[out * self.in_dim + inp]
    }

    /// Incoming weights of output neuron `out`.
    #[inline]
    pub fn row(&self, out: usize) -> &[f32] {
        &self.weights[out * self.in_dim..(out + 1) * self.in_dim]
    }

    /// Outgoing weights of input neuron `inp` (a column of the weight matrix).
    pub fn column(&self, inp: usize) -> Vec<f32> {
        (0..self.out_dim).map(|m| self.weight(m, inp)).collect()
    }

    /// Pre-activation `W x + b` for one sample, accumulated in `f64`.
    #[inline]
    pub(crate) fn affine_into(&self, x: &[f64], out: &mut [f64]) {
        for (m, o) in out.iter_mut().enumerate() {
            let row = self.row(m);
            let mut acc = self.bias[m] as f64;
            for (w, v) in row.iter().zip(x) {
                acc += *w as f64 * v;
            }
            *o = acc;
        }
    }

    fn forward(&self, input: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(input.rows(), self.out_dim);
        for r in 0..input.rows() {
            let dst = out.row_mut(r);
            self.affine_into(input.row(r), dst);
            if self.activation == Activation::Relu {
                for v in dst.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
        out
    }
}

/// A fully-connected network `x_0 -> x_1 -> ... -> x_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<LinearLayer>,
}

impl Network {
    pub fn new(input_dim: usize, layers: Vec<LinearLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig(
                "network needs at least one layer".into(),
            ));
        }
        if input_dim == 0 {
            return Err(Error::InvalidConfig(
                "input dimension must be positive".into(),
            ));
        }
        let mut prev = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim != prev {
                return Err(Error::InvalidConfig(format!(
                    "layer {} expects {} inputs but previous layer emits {prev}",
                    i + 1,
                    layer.in_dim
                )));
            }
            prev = layer.out_dim;
        }
        Ok(Self { input_dim, layers })
    }

    /// Kaiming-uniform initialized MLP over `dims = [input, hidden.., output]`.
    ///
    /// Hidden layers use ReLU, the last layer emits logits. Biases start at 0.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "architecture needs input and output dimensions".into(),
            ));
        }
        let mut rng = rng::stream(seed, rng::INIT);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            if fan_in == 0 || fan_out == 0 {
                return Err(Error::InvalidConfig(format!(
                    "zero-width layer in {dims:?}"
                )));
            }
            let limit = (6.0 / fan_in as f64).sqrt() as f32;
            let weights = sample_uniform(&mut rng, fan_in * fan_out, limit);
            let activation = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            layers.push(LinearLayer::new(
                fan_in,
                fan_out,
                weights,
                vec![0.0; fan_out],
                activation,
            )?);
        }
        Network::new(dims[0], layers)
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, |l| l.out_dim)
    }

    /// Number of layers `L`.
    #[inline]
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn num_hidden(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layers(&self) -> &[LinearLayer] {
        &self.layers
    }

    /// `layer(i)` for `i` in `1..=L`.
    pub fn layer(&self, i: usize) -> &LinearLayer {
        &self.layers[i - 1]
    }

    /// `[input_dim, out_1, ..., out_L]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim)
            .chain(self.layers.iter().map(|l| l.out_dim))
            .collect()
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.out_dim)
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Post-activation outputs `x_1..x_L` for a batch of rows.
    pub fn forward(&self, batch: &Matrix) -> Result<Vec<Matrix>> {
        if batch.cols() != self.input_dim {
            return Err(Error::Shape {
                layer: 1,
                expected: self.input_dim,
                found: batch.cols(),
            });
        }
        if batch.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "batch contains non-finite values".into(),
            ));
        }
        let mut outputs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let next = layer.forward(outputs.last().unwrap_or(batch));
            outputs.push(next);
        }
        Ok(outputs)
    }

    /// Final-layer outputs only.
    pub fn logits(&self, batch: &Matrix) -> Result<Matrix> {
        Ok(self.forward(batch)?.pop().expect("network has layers"))
    }
}

fn sample_uniform<R: Rng>(rng: &mut R, n: usize, limit: f32) -> Vec<f32> {
    let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
    (0..n).map(|_| dist.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye_net(act: Activation) -> Network {
        let l = LinearLayer::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 2], act).unwrap();
        Network::new(2, vec![l]).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let out = eye_net(Activation::Identity)
            .forward(&Matrix::from_rows(&[[1.0, -1.0]]))
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].row(0), &[1.0, -1.0]);
    }

    #[test]
    fn relu_clamps_negatives() {
        let out = eye_net(Activation::Relu)
            .forward(&Matrix::from_rows(&[[1.0, -1.0]]))
            .unwrap();
        assert_eq!(out[0].row(0), &[1.0, 0.0]);
    }

    #[test]
    fn shape_error_names_layer() {
        let err = eye_net(Activation::Relu)
            .forward(&Matrix::zeros(1, 3))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Shape {
                layer: 1,
                expected: 2,
                found: 3
            }
        ));
    }

    #[test]
    fn rejects_unchained_layers() {
        let a = LinearLayer::new(2, 3, vec![0.0; 6], vec![0.0; 3], Activation::Relu).unwrap();
        let b = LinearLayer::new(2, 1, vec![0.0; 2], vec![0.0; 1], Activation::Identity).unwrap();
        assert!(Network::new(2, vec![a, b]).is_err());
        assert!(Network::new(2, vec![]).is_err());
    }

    #[test]
    fn init_uses_relu_hidden_identity_output() {
        let net = Network::init(&[5, 7, 6, 3], 9).unwrap();
        assert_eq!(net.dims(), vec![5, 7, 6, 3]);
        assert_eq!(net.layer(1).activation(), Activation::Relu);
        assert_eq!(net.layer(2).activation(), Activation::Relu);
        assert_eq!(net.layer(3).activation(), Activation::Identity);
        let limit = (6.0f64 / 5.0).sqrt() as f32;
        assert!(net.layer(1).weights().iter().all(|w| w.abs() <= limit));
        assert_eq!(net, Network::init(&[5, 7, 6, 3], 9).unwrap());
        assert_ne!(net, Network::init(&[5, 7, 6, 3], 10).unwrap());
    }
}
