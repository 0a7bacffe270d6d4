//! Gaussian input intervention and activation tracing.
//!
//! The network input is replaced by `S` i.i.d. standard normal samples, the
//! samples are propagated through the trained network, and every layer's
//! output (including the intervention itself as layer 0) is cached after
//! per-neuron min/max normalization to `[0, 1]`.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::FormatError;
use crate::matrix::Matrix;
use crate::nn::Network;
use crate::rng;
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"MIPT";
const VERSION: u32 = 1;

/// How the `[0, 1]` range of a cached column is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Each neuron is scaled by its own observed min/max.
    #[default]
    PerNeuron,
    /// All neurons of a layer share the layer-wide min/max.
    PerLayer,
}

impl std::str::FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "per-neuron" => Ok(Normalization::PerNeuron),
            "per-layer" => Ok(Normalization::PerLayer),
            other => Err(format!(
                "unknown normalization {other:?} (per-neuron|per-layer)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Number of intervention samples `S`.
    pub num_samples: usize,
    pub seed: u64,
    pub normalization: Normalization,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            num_samples: 5000,
            seed: 0,
            normalization: Normalization::PerNeuron,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "probe needs at least 2 samples, got {}",
                self.num_samples
            )));
        }
        Ok(())
    }
}

/// Observed pre-normalization range of one neuron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronRange {
    pub min: f64,
    pub max: f64,
}

impl NeuronRange {
    pub fn is_degenerate(&self) -> bool {
        self.max <= self.min
    }

    /// Maps `v` into `[0, 1]`, clamping values outside the stored range.
    /// Degenerate ranges map everything to 0.5.
    #[inline]
    pub fn normalize(&self, v: f64) -> f64 {
        if self.is_degenerate() {
            0.5
        } else {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        }
    }

    #[inline]
    pub fn denormalize(&self, u: f64) -> f64 {
        if self.is_degenerate() {
            self.min
        } else {
            self.min + u * (self.max - self.min)
        }
    }
}

/// Normalized activations `x_0..x_L` recorded under the intervention.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    layers: Vec<Matrix>,
    ranges: Vec<Vec<NeuronRange>>,
    constant: Vec<Vec<bool>>,
}

impl ActivationTrace {
    /// Sample count `S`.
    pub fn num_samples(&self) -> usize {
        self.layers[0].rows()
    }

    /// Network depth `L`; the trace holds `L + 1` layers.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Normalized activations of layer `i` in `0..=L`, shape `S x dim_i`.
    pub fn layer(&self, i: usize) -> &Matrix {
        &self.layers[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.layers.iter().map(Matrix::cols).collect()
    }

    pub fn ranges(&self, i: usize) -> &[NeuronRange] {
        &self.ranges[i]
    }

    /// True if neuron `n` of layer `i` never changed value under the probe.
    pub fn is_constant(&self, i: usize, n: usize) -> bool {
        self.constant[i][n]
    }

    pub fn constant_flags(&self, i: usize) -> &[bool] {
        &self.constant[i]
    }

    /// Applies layer `i`'s stored ranges to fresh raw activations, clamping.
    pub fn normalize_with_ranges(&self, i: usize, raw: &Matrix) -> Matrix {
        let ranges = &self.ranges[i];
        assert_eq!(raw.cols(), ranges.len(), "width mismatch for layer {i}");
        let mut out = raw.clone();
        for r in 0..out.rows() {
            for (v, range) in out.row_mut(r).iter_mut().zip(ranges) {
                *v = range.normalize(*v);
            }
        }
        out
    }

    /// Undoes the normalization of layer `i`.
    pub fn denormalize(&self, i: usize) -> Matrix {
        let ranges = &self.ranges[i];
        let mut out = self.layers[i].clone();
        for r in 0..out.rows() {
            for (v, range) in out.row_mut(r).iter_mut().zip(ranges) {
                *v = range.denormalize(*v);
            }
        }
        out
    }

    /// `MIPT` encoding. Activations and ranges are stored as `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&MAGIC);
        w.u32(VERSION);
        w.len_u32(self.num_samples());
        w.len_u32(self.depth());
        for (m, ranges) in self.layers.iter().zip(&self.ranges) {
            w.len_u32(m.cols());
            for r in ranges {
                w.f32(r.min as f32);
                w.f32(r.max as f32);
            }
            m.as_slice().iter().for_each(|&v| w.f32(v as f32));
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let samples = r.u32("sample count")? as usize;
        let depth = r.u32("layer count")? as usize;
        if samples < 2 || depth == 0 {
            return Err(FormatError::Dimensions(format!(
                "trace needs S >= 2 and L >= 1, got S = {samples}, L = {depth}"
            )));
        }
        let mut layers = Vec::with_capacity(depth + 1);
        let mut ranges = Vec::with_capacity(depth + 1);
        for i in 0..=depth {
            let dim = r.u32("layer width")? as usize;
            if dim == 0 {
                return Err(FormatError::Dimensions(format!(
                    "trace layer {i} has width 0"
                )));
            }
            let raw = r.f32_vec(2 * dim, "ranges")?;
            let layer_ranges: Vec<NeuronRange> = raw
                .chunks_exact(2)
                .map(|c| NeuronRange {
                    min: c[0] as f64,
                    max: c[1] as f64,
                })
                .collect();
            let values = r.f32_vec(samples * dim, "activations")?;
            if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(FormatError::Dimensions(format!(
                    "trace layer {i} holds {v}, outside [0, 1]"
                )));
            }
            layers.push(Matrix::from_vec(
                samples,
                dim,
                values.into_iter().map(|v| v as f64).collect(),
            ));
            ranges.push(layer_ranges);
        }
        r.finish()?;
        let constant = layers.iter().map(constant_columns).collect();
        Ok(Self {
            layers,
            ranges,
            constant,
        })
    }
}

fn constant_columns(m: &Matrix) -> Vec<bool> {
    let mut flags = vec![true; m.cols()];
    if m.rows() == 0 {
        return flags;
    }
    let first = m.row(0);
    for r in 1..m.rows() {
        for ((f, v), v0) in flags.iter_mut().zip(m.row(r)).zip(first) {
            if v != v0 {
                *f = false;
            }
        }
    }
    flags
}

/// Draws the `S x input_dim` standard normal intervention.
pub fn sample_intervention(input_dim: usize, cfg: &ProbeConfig) -> Result<Matrix> {
    cfg.validate()?;
    if input_dim == 0 {
        return Err(Error::InvalidConfig(
            "input dimension must be positive".into(),
        ));
    }
    let mut rng = rng::stream(cfg.seed, rng::PROBE);
    let data = (0..cfg.num_samples * input_dim)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Ok(Matrix::from_vec(cfg.num_samples, input_dim, data))
}

/// Propagates the intervention through `net` and records every layer.
pub fn record_trace(net: &Network, cfg: &ProbeConfig) -> Result<ActivationTrace> {
    let x0 = sample_intervention(net.input_dim(), cfg)?;
    let outputs = net.forward(&x0)?;
    let mut layers = Vec::with_capacity(outputs.len() + 1);
    let mut ranges = Vec::with_capacity(outputs.len() + 1);
    let mut constant = Vec::with_capacity(outputs.len() + 1);
    for (i, raw) in std::iter::once(x0).chain(outputs).enumerate() {
        let (norm, r, c) = normalize_layer(i, raw, cfg.normalization)?;
        layers.push(norm);
        ranges.push(r);
        constant.push(c);
    }
    Ok(ActivationTrace {
        layers,
        ranges,
        constant,
    })
}

type NormalizedLayer = (Matrix, Vec<NeuronRange>, Vec<bool>);

fn normalize_layer(layer: usize, mut raw: Matrix, mode: Normalization) -> Result<NormalizedLayer> {
    let dim = raw.cols();
    let mut own = vec![
        NeuronRange {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        dim
    ];
    for r in 0..raw.rows() {
        for (n, (&v, range)) in raw.row(r).iter().zip(own.iter_mut()).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteActivation { layer, neuron: n });
            }
            range.min = range.min.min(v);
            range.max = range.max.max(v);
        }
    }
    let constant: Vec<bool> = own.iter().map(NeuronRange::is_degenerate).collect();
    let ranges = match mode {
        Normalization::PerNeuron => own,
        Normalization::PerLayer => {
            let shared = NeuronRange {
                min: own.iter().map(|r| r.min).fold(f64::INFINITY, f64::min),
                max: own.iter().map(|r| r.max).fold(f64::NEG_INFINITY, f64::max),
            };
            vec![shared; dim]
        }
    };
    for r in 0..raw.rows() {
        for (v, range) in raw.row_mut(r).iter_mut().zip(&ranges) {
            *v = range.normalize(*v);
        }
    }
    Ok((raw, ranges, constant))
}

pub fn save_trace(trace: &ActivationTrace, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &trace.to_bytes())
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<ActivationTrace> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    ActivationTrace::from_bytes(&bytes).map_err(|e| Error::format(path, e))
}
