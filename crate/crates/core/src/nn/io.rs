//! `MIPR` model files.
//!
//! Layout (little-endian): magic `MIPR`, `u32` version (1), `u32` layer count
//! `L`, `u32` input dimension, then per layer `u32` out_dim, `u8` activation
//! (0 identity, 1 ReLU), `out_dim * in_dim` `f32` weights row-major and
//! `out_dim` `f32` biases.

use std::path::Path;

use super::{Activation, LinearLayer, Network};
use crate::binio::{read_file, write_file, Reader, Writer};
use crate::error::FormatError;
use crate::{Error, Result};

const MAGIC: [u8; 4] = *b"MIPR";
const VERSION: u32 = 1;

pub fn model_to_bytes(net: &Network) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    w.len_u32(net.depth());
    w.len_u32(net.input_dim());
    for layer in net.layers() {
        w.len_u32(layer.out_dim());
        w.u8(layer.activation().code());
        layer.weights().iter().for_each(|&v| w.f32(v));
        layer.bias().iter().for_each(|&v| w.f32(v));
    }
    w.finish()
}

pub fn model_from_bytes(bytes: &[u8]) -> std::result::Result<Network, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    r.version(VERSION)?;
    let depth = r.u32("layer count")? as usize;
    let input_dim = r.u32("input dimension")? as usize;
    if depth == 0 || input_dim == 0 {
        return Err(FormatError::Dimensions(format!(
            "layer count {depth} and input dimension {input_dim} must be positive"
        )));
    }
    let mut layers = Vec::with_capacity(depth.min(1024));
    let mut in_dim = input_dim;
    for i in 1..=depth {
        let out_dim = r.u32("layer width")? as usize;
        if out_dim == 0 {
            return Err(FormatError::Dimensions(format!("layer {i} has width 0")));
        }
        let code = r.u8("activation")?;
        let activation = Activation::from_code(code).ok_or_else(|| {
            FormatError::Dimensions(format!("layer {i} has unknown activation code {code}"))
        })?;
        let weights = r.f32_vec(out_dim * in_dim, "weights")?;
        let bias = r.f32_vec(out_dim, "bias")?;
        let layer = LinearLayer::new(in_dim, out_dim, weights, bias, activation)
            .map_err(|e| FormatError::Dimensions(format!("layer {i}: {e}")))?;
        layers.push(layer);
        in_dim = out_dim;
    }
    r.finish()?;
    Network::new(input_dim, layers).map_err(|e| FormatError::Dimensions(e.to_string()))
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &model_to_bytes(net))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    model_from_bytes(&bytes).map_err(|e| Error::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Network {
        Network::init(&[4, 6, 5, 3], 17).unwrap()
    }

    #[test]
    fn header_layout() {
        let b = model_to_bytes(&net());
        assert_eq!(&b[..4], b"MIPR");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 6);
        assert_eq!(b[20], 1);
        let expected = 16 + (5 + 4 * (6 * 4 + 6)) + (5 + 4 * (5 * 6 + 5)) + (5 + 4 * (3 * 5 + 3));
        assert_eq!(b.len(), expected);
    }

    #[test]
    fn round_trip_is_bitwise() {
        let n = net();
        let back = model_from_bytes(&model_to_bytes(&n)).unwrap();
        assert_eq!(back, n);
        assert_eq!(model_to_bytes(&back), model_to_bytes(&n));
    }

    #[test]
    fn wrong_magic() {
        let mut b = model_to_bytes(&net());
        b[..4].copy_from_slice(b"NOPE");
        assert!(matches!(
            model_from_bytes(&b),
            Err(FormatError::BadMagic { .. })
        ));
    }

    #[test]
    fn wrong_version() {
        let mut b = model_to_bytes(&net());
        b[4] = 2;
        assert!(matches!(
            model_from_bytes(&b),
            Err(FormatError::Version {
                expected: 1,
                found: 2
            })
        ));
    }

    #[test]
    fn truncated_mid_weights() {
        let b = model_to_bytes(&net());
        assert!(matches!(
            model_from_bytes(&b[..40]),
            Err(FormatError::Truncated { what: "weights" })
        ));
    }

    #[test]
    fn inconsistent_dimensions() {
        let mut b = model_to_bytes(&net());
        b[16..20].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(
            model_from_bytes(&b),
            Err(FormatError::Dimensions(_))
        ));
        let mut b = model_to_bytes(&net());
        b.push(0);
        assert!(matches!(
            model_from_bytes(&b),
            Err(FormatError::TrailingBytes(1))
        ));
    }

    #[test]
    fn file_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        std::fs::write(&p, b"MIPR").unwrap();
        match load_model(&p).unwrap_err() {
            Error::Format { path, .. } => assert_eq!(path, p),
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            load_model(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
