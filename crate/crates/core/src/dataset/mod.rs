//! Labelled classification datasets.
//!
//! Two on-disk sources are understood: the CIFAR-10 binary batches, parsed
//! natively by [`load_cifar10_binary`], and the crate's own `MIPD` container
//! ([`load_dataset`] / [`save_dataset`]). Anything else (SVHN's `.mat` files,
//! CSV exports) is converted to `MIPD` up front; see the README for the recipe.

mod cifar;
mod synthetic;

use std::path::Path;

pub use cifar::{is_cifar10_dir, load_cifar10_binary};
pub use synthetic::make_synthetic;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::FormatError;
use crate::matrix::Matrix;
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"MIPD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f32>,
    dim: usize,
    labels: Vec<u32>,
    num_classes: usize,
    split: Split,
}

impl Dataset {
    /// `features` is row-major `labels.len() x dim`.
    pub fn new(
        features: Vec<f32>,
        dim: usize,
        labels: Vec<u32>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::InvalidInput(
                "dataset dimension and class count must be positive".into(),
            ));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::InvalidInput(format!(
                "{} feature values do not form {} rows of width {dim}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::InvalidInput(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            dim,
            labels,
            num_classes,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Gathers the given rows into an `f64` batch.
    pub fn batch(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend(self.sample(i).iter().map(|&v| v as f64));
        }
        Matrix::from_vec(indices.len(), self.dim, data)
    }

    /// Contiguous rows `start..end` as an `f64` batch.
    pub fn range(&self, start: usize, end: usize) -> Matrix {
        let data = self.features[start * self.dim..end * self.dim]
            .iter()
            .map(|&v| v as f64)
            .collect();
        Matrix::from_vec(end - start, self.dim, data)
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(&MAGIC);
        w.u32(VERSION);
        w.len_u32(self.len());
        w.len_u32(self.dim);
        w.len_u32(self.num_classes);
        for &l in &self.labels {
            w.u32(l);
        }
        for &v in &self.features {
            w.f32(v);
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8], split: Split) -> std::result::Result<Self, FormatError> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        r.version(VERSION)?;
        let num = r.u32("sample count")? as usize;
        let dim = r.u32("feature dimension")? as usize;
        let classes = r.u32("class count")? as usize;
        if num == 0 {
            return Err(FormatError::Dimensions("dataset has 0 samples".into()));
        }
        if dim == 0 || classes == 0 {
            return Err(FormatError::Dimensions(format!(
                "dimension {dim} and class count {classes} must be positive"
            )));
        }
        let labels = r.u32_vec(num, "labels")?;
        let features = r.f32_vec(num * dim, "features")?;
        r.finish()?;
        Dataset::new(features, dim, labels, classes, split)
            .map_err(|e| FormatError::Dimensions(e.to_string()))
    }
}

/// Reads an `MIPD` dataset file.
pub fn load_dataset(path: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    Dataset::from_bytes(&bytes, split).map_err(|e| Error::format(path, e))
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &data.to_bytes())
}

/// Per-feature affine map to zero mean and unit variance, fitted on one split
/// and applied to others.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Self {
        let n = data.len().max(1) as f64;
        let mut mean = vec![0.0; data.dim];
        for i in 0..data.len() {
            for (m, &v) in mean.iter_mut().zip(data.sample(i)) {
                *m += v as f64;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; data.dim];
        for i in 0..data.len() {
            for ((s, &v), m) in var.iter_mut().zip(data.sample(i)).zip(&mean) {
                let d = v as f64 - m;
                *s += d * d;
            }
        }
        // Constant features are only centred.
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply(&self, data: &mut Dataset) {
        assert_eq!(data.dim, self.mean.len(), "standardizer dimension mismatch");
        for row in data.features.chunks_exact_mut(self.mean.len()) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = ((*v as f64 - m) / s) as f32;
            }
        }
    }
}

/// Standardizes both splits with statistics fitted on `train`.
pub fn standardize(train: &mut Dataset, test: &mut Dataset) {
    let s = Standardizer::fit(train);
    s.apply(train);
    s.apply(test);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            2,
            vec![0, 1, 2],
            3,
            Split::Train,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_bytes() {
        let d = tiny();
        assert_eq!(Dataset::from_bytes(&d.to_bytes(), Split::Train).unwrap(), d);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut b = tiny().to_bytes();
        b[0] = b'X';
        assert!(matches!(
            Dataset::from_bytes(&b, Split::Train),
            Err(FormatError::BadMagic { .. })
        ));
    }

    #[test]
    fn zero_samples_rejected() {
        let mut w = Writer::new();
        w.bytes(&MAGIC);
        w.u32(VERSION);
        w.u32(0);
        w.u32(4);
        w.u32(2);
        assert!(matches!(
            Dataset::from_bytes(&w.finish(), Split::Test),
            Err(FormatError::Dimensions(_))
        ));
    }

    #[test]
    fn truncated_rejected() {
        let b = tiny().to_bytes();
        assert!(matches!(
            Dataset::from_bytes(&b[..b.len() - 3], Split::Train),
            Err(FormatError::Truncated { .. })
        ));
    }

    #[test]
    fn label_range_checked() {
        assert!(Dataset::new(vec![0.0; 2], 1, vec![0, 3], 3, Split::Train).is_err());
    }

    #[test]
    fn standardizer_centres_and_scales() {
        let mut a = tiny();
        let mut b = tiny();
        standardize(&mut a, &mut b);
        for c in 0..2 {
            let col: Vec<f64> = (0..3).map(|i| a.sample(i)[c] as f64).collect();
            let mean = col.iter().sum::<f64>() / 3.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-5);
        }
        assert_eq!(a.features(), b.features());
    }
}
