//! CIFAR-10 binary batches (`data_batch_{1..5}.bin`, `test_batch.bin`).
//!
//! Each record is one label byte followed by 3072 pixel bytes (1024 red, 1024
//! green, 1024 blue). Files hold exactly 10000 records.

use std::path::Path;

use super::{Dataset, Split, Standardizer};
use crate::binio::read_file;
use crate::error::FormatError;
use crate::{Error, Result};

pub const IMAGE_BYTES: usize = 3 * 32 * 32;
pub const RECORD_BYTES: usize = IMAGE_BYTES + 1;
pub const RECORDS_PER_FILE: usize = 10_000;
pub const FILE_BYTES: usize = RECORD_BYTES * RECORDS_PER_FILE;

const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
const TEST_FILE: &str = "test_batch.bin";

fn read_batch(path: &Path, labels: &mut Vec<u32>, features: &mut Vec<f32>) -> Result<()> {
    let bytes = read_file(path)?;
    if bytes.len() != FILE_BYTES {
        return Err(Error::format(
            path,
            FormatError::Dimensions(format!(
                "CIFAR-10 batch must be {FILE_BYTES} bytes, found {}",
                bytes.len()
            )),
        ));
    }
    for record in bytes.chunks_exact(RECORD_BYTES) {
        let label = record[0];
        if label > 9 {
            return Err(Error::format(
                path,
                FormatError::Dimensions(format!("label byte {label} outside 0..=9")),
            ));
        }
        labels.push(label as u32);
        features.extend(record[1..].iter().map(|&p| p as f32 / 255.0));
    }
    Ok(())
}

/// Loads the train (50000) and test (10000) splits from a CIFAR-10 binary
/// directory. Pixels are scaled to `[0, 1]`, then standardized per feature
/// with statistics of the training split.
pub fn load_cifar10_binary(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset)> {
    let dir = dir.as_ref();
    let mut labels = Vec::with_capacity(5 * RECORDS_PER_FILE);
    let mut features = Vec::with_capacity(5 * RECORDS_PER_FILE * IMAGE_BYTES);
    for name in TRAIN_FILES {
        read_batch(&dir.join(name), &mut labels, &mut features)?;
    }
    let mut train = Dataset::new(features, IMAGE_BYTES, labels, 10, Split::Train)?;

    let mut labels = Vec::with_capacity(RECORDS_PER_FILE);
    let mut features = Vec::with_capacity(RECORDS_PER_FILE * IMAGE_BYTES);
    read_batch(&dir.join(TEST_FILE), &mut labels, &mut features)?;
    let mut test = Dataset::new(features, IMAGE_BYTES, labels, 10, Split::Test)?;

    let s = Standardizer::fit(&train);
    s.apply(&mut train);
    s.apply(&mut test);
    Ok((train, test))
}

/// True if `dir` contains all six CIFAR-10 batch files.
pub fn is_cifar10_dir(dir: &Path) -> bool {
    TRAIN_FILES
        .iter()
        .chain(std::iter::once(&TEST_FILE))
        .all(|f| dir.join(f).is_file())
}
