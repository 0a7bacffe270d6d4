//! Fully-connected networks: representation, forward pass, training and the
//! `MIPR` model file.

mod io;
mod network;
mod train;

pub use io::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use network::{Activation, LinearLayer, Network};
pub use train::{evaluate, train, TrainConfig};
