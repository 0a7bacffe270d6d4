//! Data-free structured pruning for fully-connected networks.
//!
//! A trained network is probed with standard normal inputs, the mutual
//! information between every pair of adjacent-layer neurons is estimated from
//! joint histograms, and hidden neurons with the least summed information
//! flowing in from the kept neurons of the previous layer are removed. The
//! crate also ships baseline scorers, a linear depth-wise schedule, a small
//! trainer and an experiment harness.
//!
//! ```
//! use mep_prune::dataset::make_synthetic;
//! use mep_prune::mi::{all_layer_mi, HistogramConfig};
//! use mep_prune::nn::{evaluate, train, TrainConfig};
//! use mep_prune::probe::{record_trace, ProbeConfig};
//! use mep_prune::prune::{prune, Method, ScoringInputs};
//!
//! let (train_set, test_set) = make_synthetic(3, 4, 30, 6.0, 7).unwrap();
//! let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
//! let net = train(&[4, 16, 3], &train_set, &cfg).unwrap();
//!
//! let trace = record_trace(&net, &ProbeConfig { num_samples: 500, ..Default::default() }).unwrap();
//! let mi = all_layer_mi(&trace, &HistogramConfig { bins: 16 }).unwrap();
//! let inputs = ScoringInputs { trace: Some(&trace), mi: Some(&mi) };
//! let out = prune(&net, Method::Mi, 0.25, inputs, 0).unwrap();
//!
//! assert_eq!(out.network.hidden_widths(), vec![12]);
//! let _err = evaluate(&out.network, &test_set).unwrap();
//! ```

pub(crate) mod binio;
pub mod cli;
pub mod dataset;
mod error;
pub mod harness;
pub mod matrix;
pub mod mi;
pub mod nn;
pub mod probe;
pub mod prune;
pub(crate) mod rng;

pub use error::{Error, FormatError, Result};
pub use matrix::Matrix;
