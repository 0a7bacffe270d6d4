//! Histogram mutual information between consecutive layers.
//!
//! Every connection `(n, m)` of layer `i` gets the plug-in estimate
//!
//! ```text
//! I(n, m) = sum_{u,v} p(u, v) ln( p(u, v) / (p(u) p(v)) )
//! ```
//!
//! from a `B x B` joint histogram of input column `n` of `x_{i-1}` and output
//! column `m` of `x_i`, both already normalized to `[0, 1]` by the probe.
//! Values are in nats.

use std::path::Path;

use rayon::prelude::*;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::FormatError;
use crate::probe::ActivationTrace;
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"MIPM";
const VERSION: u32 = 1;
const RANGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramConfig {
    /// Bins per axis `B`.
    pub bins: usize,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self { bins: 32 }
    }
}

impl HistogramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!(
                "histogram needs at least 2 bins, got {}",
                self.bins
            )));
        }
        if self.bins > u16::MAX as usize {
            return Err(Error::InvalidConfig(format!(
                "{} bins is too many",
                self.bins
            )));
        }
        Ok(())
    }
}

/// `B x B` joint counts; rows index the first variable's bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointHistogram {
    bins: usize,
    counts: Vec<u64>,
    total: u64,
}

impl JointHistogram {
    /// Builds a histogram from explicit row-major counts. Panics unless
    /// `counts.len() == bins * bins` and the total is positive.
    pub fn from_counts(bins: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), bins * bins, "need {bins}x{bins} counts");
        let total = counts.iter().sum();
        assert!(total > 0, "empty histogram");
        Self {
            bins,
            counts,
            total,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    #[inline]
    pub fn count(&self, u: usize, v: usize) -> u64 {
        self.counts[u * self.bins + v]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn transpose(&self) -> Self {
        let b = self.bins;
        let mut counts = vec![0; b * b];
        for u in 0..b {
            for v in 0..b {
                counts[v * b + u] = self.counts[u * b + v];
            }
        }
        Self {
            bins: b,
            counts,
            total: self.total,
        }
    }
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v.clamp(0.0, 1.0) * bins as f64).floor() as usize).min(bins - 1)
}

fn bin_column(values: &[f64], bins: usize) -> Result<Vec<u16>> {
    values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if !(-RANGE_TOLERANCE..=1.0 + RANGE_TOLERANCE).contains(&value) {
                return Err(Error::OutOfRange { index, value });
            }
            Ok(bin_of(value, bins) as u16)
        })
        .collect()
}

/// Bins two `[0, 1]`-valued columns with edge rule `min(floor(v * B), B - 1)`.
pub fn joint_histogram(x: &[f64], y: &[f64], cfg: &HistogramConfig) -> Result<JointHistogram> {
    cfg.validate()?;
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "columns differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("cannot histogram zero samples".into()));
    }
    let bx = bin_column(x, cfg.bins)?;
    let by = bin_column(y, cfg.bins)?;
    let mut counts = vec![0u64; cfg.bins * cfg.bins];
    fill_counts(&bx, &by, cfg.bins, &mut counts);
    Ok(JointHistogram {
        bins: cfg.bins,
        counts,
        total: x.len() as u64,
    })
}

#[inline]
fn fill_counts(bx: &[u16], by: &[u16], bins: usize, counts: &mut [u64]) {
    counts.iter_mut().for_each(|c| *c = 0);
    for (&u, &v) in bx.iter().zip(by) {
        counts[u as usize * bins + v as usize] += 1;
    }
}

/// Plug-in mutual information in nats, clamped at 0.
pub fn mutual_information(h: &JointHistogram) -> f64 {
    mi_from_counts(&h.counts, h.bins, h.total)
}

fn mi_from_counts(counts: &[u64], bins: usize, total: u64) -> f64 {
    let mut rows = vec![0u64; bins];
    let mut cols = vec![0u64; bins];
    for u in 0..bins {
        for v in 0..bins {
            let c = counts[u * bins + v];
            rows[u] += c;
            cols[v] += c;
        }
    }
    let s = total as f64;
    let mut mi = 0.0;
    for u in 0..bins {
        if rows[u] == 0 {
            continue;
        }
        for v in 0..bins {
            let c = counts[u * bins + v];
            if c == 0 {
                continue;
            }
            let c = c as f64;
            mi += c / s * (c * s / (rows[u] as f64 * cols[v] as f64)).ln();
        }
    }
    mi.max(0.0)
}

/// Entropy in nats of the `B`-bin marginal histogram of `x`.
pub fn binned_entropy(x: &[f64], cfg: &HistogramConfig) -> Result<f64> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::InvalidInput("cannot histogram zero samples".into()));
    }
    let mut counts = vec![0u64; cfg.bins];
    for b in bin_column(x, cfg.bins)? {
        counts[b as usize] += 1;
    }
    let s = x.len() as f64;
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / s;
            -p * p.ln()
        })
        .sum())
}

/// Per-connection MI of one layer: `values[n * M + m]` pairs input neuron `n`
/// with output neuron `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MIMatrix {
    layer: usize,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl MIMatrix {
    /// Builds a matrix from row-major values. Panics on a shape mismatch.
    pub fn new(layer: usize, rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "MI matrix must be {rows}x{cols}");
        Self {
            layer,
            rows,
            cols,
            values,
        }
    }

    /// Layer index `i` in `1..=L`.
    pub fn layer(&self) -> usize {
        self.layer
    }

    /// Input width `N`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Output width `M`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.values[n * self.cols + m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Estimates the MI matrix of layer `i` (`x_{i-1}` against `x_i`).
///
/// Pairs are evaluated in parallel on the current rayon pool. Every entry is
/// computed independently, so the result does not depend on thread count.
pub fn layer_mi(trace: &ActivationTrace, i: usize, cfg: &HistogramConfig) -> Result<MIMatrix> {
    cfg.validate()?;
    if i == 0 || i > trace.depth() {
        return Err(Error::LayerIndex {
            index: i,
            max: trace.depth(),
        });
    }
    let bins = cfg.bins;
    let inputs = trace.layer(i - 1);
    let outputs = trace.layer(i);
    let binned = |layer: usize, m: &crate::matrix::Matrix| -> Result<Vec<Option<Vec<u16>>>> {
        (0..m.cols())
            .map(|c| {
                if trace.is_constant(layer, c) {
                    Ok(None)
                } else {
                    bin_column(&m.column(c), bins).map(Some)
                }
            })
            .collect()
    };
    let in_bins = binned(i - 1, inputs)?;
    let out_bins = binned(i, outputs)?;
    let total = trace.num_samples() as u64;
    let (n_in, n_out) = (inputs.cols(), outputs.cols());

    let mut values = vec![0.0; n_in * n_out];
    values
        .par_chunks_mut(n_out)
        .zip(in_bins.par_iter())
        .for_each_init(
            || vec![0u64; bins * bins],
            |counts, (row, bx)| {
                let Some(bx) = bx else { return };
                for (v, by) in row.iter_mut().zip(&out_bins) {
                    if let Some(by) = by {
                        fill_counts(bx, by, bins, counts);
                        *v = mi_from_counts(counts, bins, total);
                    }
                }
            },
        );
    Ok(MIMatrix::new(i, n_in, n_out, values))
}

/// MI matrices for layers `1..=L`.
pub fn all_layer_mi(trace: &ActivationTrace, cfg: &HistogramConfig) -> Result<Vec<MIMatrix>> {
    (1..=trace.depth())
        .map(|i| layer_mi(trace, i, cfg))
        .collect()
}

/// Cached MI matrices together with the estimator settings that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct MiCache {
    pub bins: usize,
    pub samples: usize,
    pub layers: Vec<MIMatrix>,
}

impl MiCache {
    pub fn compute(trace: &ActivationTrace, cfg: &HistogramConfig) -> Result<Self> {
        Ok(Self {
            bins: cfg.bins,
            samples: trace.num_samples(),
            layers: all_layer_mi(trace, cfg)?,
        })
    }

    /// `MIPM` encoding: magic, version, `L`, `B`, `S`, then per layer `N`, `M`
    /// and `N * M` `f64` values row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&MAGIC);
        w.u32(VERSION);
        w.len_u32(self.layers.len());
        w.len_u32(self.bins);
        w.len_u32(self.samples);
        for m in &self.layers {
            w.len_u32(m.rows);
            w.len_u32(m.cols);
            m.values.iter().for_each(|&v| w.f64(v));
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let depth = r.u32("layer count")? as usize;
        let bins = r.u32("bin count")? as usize;
        let samples = r.u32("sample count")? as usize;
        if depth == 0 || bins < 2 || samples < 2 {
            return Err(FormatError::Dimensions(format!(
                "need L >= 1, B >= 2, S >= 2; got L = {depth}, B = {bins}, S = {samples}"
            )));
        }
        let mut layers: Vec<MIMatrix> = Vec::with_capacity(depth.min(1024));
        for i in 1..=depth {
            let rows = r.u32("input width")? as usize;
            let cols = r.u32("output width")? as usize;
            if rows == 0 || cols == 0 {
                return Err(FormatError::Dimensions(format!("MI layer {i} is empty")));
            }
            if let Some(prev) = layers.last() {
                if prev.cols != rows {
                    return Err(FormatError::Dimensions(format!(
                        "MI layer {i} has {rows} inputs but layer {} has {} outputs",
                        i - 1,
                        prev.cols
                    )));
                }
            }
            let values = r.f64_vec(rows * cols, "MI values")?;
            layers.push(MIMatrix::new(i, rows, cols, values));
        }
        r.finish()?;
        Ok(Self {
            bins,
            samples,
            layers,
        })
    }
}

pub fn save_mi(cache: &MiCache, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &cache.to_bytes())
}

pub fn load_mi(path: impl AsRef<Path>) -> Result<MiCache> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    MiCache::from_bytes(&bytes).map_err(|e| Error::format(path, e))
}
