use std::io::Write;

use rand::distr::Open01;
use rand::Rng;

use super::Method;
use crate::mi::MIMatrix;
use crate::nn::{LinearLayer, Network};
use crate::probe::ActivationTrace;
use crate::rng;
use crate::{Error, Result};

/// One hidden neuron's score; `layer` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronScore {
    pub layer: usize,
    pub neuron: usize,
    pub score: f64,
    pub method: Method,
}

/// Scores for every hidden layer; `per_layer[h - 1]` belongs to layer `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub method: Method,
    pub per_layer: Vec<Vec<f64>>,
}

impl Scores {
    pub fn iter(&self) -> impl Iterator<Item = NeuronScore> + '_ {
        self.per_layer.iter().enumerate().flat_map(move |(h, v)| {
            v.iter().enumerate().map(move |(n, &score)| NeuronScore {
                layer: h + 1,
                neuron: n,
                score,
                method: self.method,
            })
        })
    }
}

/// Writes `method,layer,neuron,score` rows.
pub fn write_scores_csv<W: Write>(scores: &[Scores], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "layer", "neuron", "score"])?;
    for s in scores {
        for ns in s.iter() {
            w.write_record([
                ns.method.name().to_string(),
                ns.layer.to_string(),
                ns.neuron.to_string(),
                ns.score.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))?;
    Ok(())
}

/// Sum of incoming MI per output neuron, skipping inputs whose `keep` entry is
/// false.
pub fn mi_layer_scores(mi: &MIMatrix, keep: Option<&[bool]>) -> Result<Vec<f64>> {
    if let Some(k) = keep {
        if k.len() != mi.rows() {
            return Err(Error::InvalidInput(format!(
                "mask of length {} for MI layer {} with {} inputs",
                k.len(),
                mi.layer(),
                mi.rows()
            )));
        }
    }
    let mut scores = vec![0.0; mi.cols()];
    for n in 0..mi.rows() {
        if keep.is_some_and(|k| !k[n]) {
            continue;
        }
        for (m, s) in scores.iter_mut().enumerate() {
            *s += mi.get(n, m);
        }
    }
    Ok(scores)
}

/// MI scores for the given layers, each with the keep-mask of its inputs.
pub fn score_mi(mi: &[MIMatrix], masks: &[Vec<bool>]) -> Result<Vec<Vec<f64>>> {
    if mi.len() != masks.len() {
        return Err(Error::InvalidInput(format!(
            "{} masks for {} MI matrices",
            masks.len(),
            mi.len()
        )));
    }
    mi.iter()
        .zip(masks)
        .map(|(m, k)| mi_layer_scores(m, Some(k)))
        .collect()
}

/// L2 norm of each neuron's incoming weight row.
pub fn magnitude_layer_scores(layer: &LinearLayer) -> Vec<f64> {
    (0..layer.out_dim())
        .map(|m| {
            layer
                .row(m)
                .iter()
                .map(|&w| (w as f64) * (w as f64))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

pub fn score_magnitude(net: &Network) -> Vec<Vec<f64>> {
    score_magnitude_with(net, MagnitudeBasis::Incoming)
}

/// Which weights the magnitude scorer measures for a hidden neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MagnitudeBasis {
    /// The neuron's incoming row in its own layer.
    #[default]
    Incoming,
    /// The neuron's outgoing column in the next layer.
    Outgoing,
    /// Both, as one concatenated vector.
    Both,
}

impl std::str::FromStr for MagnitudeBasis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "incoming" => Ok(MagnitudeBasis::Incoming),
            "outgoing" => Ok(MagnitudeBasis::Outgoing),
            "both" => Ok(MagnitudeBasis::Both),
            other => Err(format!(
                "unknown magnitude basis {other:?} (incoming|outgoing|both)"
            )),
        }
    }
}

pub fn score_magnitude_with(net: &Network, basis: MagnitudeBasis) -> Vec<Vec<f64>> {
    let layers = net.layers();
    (0..net.num_hidden())
        .map(|h| {
            let sq_in = || {
                (0..layers[h].out_dim()).map(|m| {
                    layers[h]
                        .row(m)
                        .iter()
                        .map(|&w| (w as f64).powi(2))
                        .sum::<f64>()
                })
            };
            let next = &layers[h + 1];
            let sq_out = || {
                (0..layers[h].out_dim()).map(|m| {
                    next.column(m)
                        .iter()
                        .map(|&w| (w as f64).powi(2))
                        .sum::<f64>()
                })
            };
            let sq: Vec<f64> = match basis {
                MagnitudeBasis::Incoming => sq_in().collect(),
                MagnitudeBasis::Outgoing => sq_out().collect(),
                MagnitudeBasis::Both => sq_in().zip(sq_out()).map(|(a, b)| a + b).collect(),
            };
            sq.into_iter().map(f64::sqrt).collect()
        })
        .collect()
}

/// I.i.d. uniform scores on the open interval `(0, 1)`.
pub fn score_random(net: &Network, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, rng::RANDOM_SCORES);
    net.hidden_widths()
        .into_iter()
        .map(|w| (0..w).map(|_| rng.sample(Open01)).collect())
        .collect()
}

/// `1 - max |pearson|` against the other neurons of the same layer, over the
/// probe trace. Constant neurons score 0; a lone neuron scores 1.
pub fn score_correlation(trace: &ActivationTrace) -> Vec<Vec<f64>> {
    (1..trace.depth())
        .map(|h| correlation_layer_scores(trace, h))
        .collect()
}

fn correlation_layer_scores(trace: &ActivationTrace, h: usize) -> Vec<f64> {
    let acts = trace.layer(h);
    let width = acts.cols();
    if width == 1 {
        return vec![1.0];
    }
    // Centred, unit-norm columns so that correlations are plain dot products.
    let unit: Vec<Option<Vec<f64>>> = (0..width)
        .map(|c| {
            if trace.is_constant(h, c) {
                return None;
            }
            let mut col = acts.column(c);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.iter_mut().for_each(|v| *v -= mean);
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return None;
            }
            col.iter_mut().for_each(|v| *v /= norm);
            Some(col)
        })
        .collect();
    let mut max_abs = vec![0.0f64; width];
    for a in 0..width {
        let Some(ca) = &unit[a] else { continue };
        for b in a + 1..width {
            let Some(cb) = &unit[b] else { continue };
            let r = ca
                .iter()
                .zip(cb)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                .abs()
                .min(1.0);
            max_abs[a] = max_abs[a].max(r);
            max_abs[b] = max_abs[b].max(r);
        }
    }
    (0..width)
        .map(|c| {
            if unit[c].is_none() {
                0.0
            } else {
                1.0 - max_abs[c]
            }
        })
        .collect()
}

/// Saliency `min_{m' != m} |a_{m'}|^2 |w_m - w_{m'}|^2`, where `w` is a
/// neuron's incoming row with its bias appended and `a` its outgoing column.
/// A lone neuron gets `|a_m|^2 |w_m|^2`.
pub fn score_weight_similarity(net: &Network) -> Vec<Vec<f64>> {
    (1..net.depth())
        .map(|h| {
            let layer = net.layer(h);
            let next = net.layer(h + 1);
            let width = layer.out_dim();
            let incoming: Vec<Vec<f64>> = (0..width)
                .map(|m| {
                    layer
                        .row(m)
                        .iter()
                        .chain(std::iter::once(&layer.bias()[m]))
                        .map(|&v| v as f64)
                        .collect()
                })
                .collect();
            let out_sq: Vec<f64> = (0..width)
                .map(|m| next.column(m).iter().map(|&v| (v as f64).powi(2)).sum())
                .collect();
            (0..width)
                .map(|m| {
                    if width == 1 {
                        return out_sq[m] * incoming[m].iter().map(|v| v * v).sum::<f64>();
                    }
                    (0..width)
                        .filter(|&o| o != m)
                        .map(|o| {
                            let dist: f64 = incoming[m]
                                .iter()
                                .zip(&incoming[o])
                                .map(|(a, b)| (a - b).powi(2))
                                .sum();
                            out_sq[o] * dist
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nn::Activation;
    use crate::probe::{record_trace, ProbeConfig};

    fn two_layer(hidden: LinearLayer, out: LinearLayer) -> Network {
        Network::new(hidden.in_dim(), vec![hidden, out]).unwrap()
    }

    #[test]
    fn mi_scores_sum_incoming_links() {
        let mi = MIMatrix::new(1, 2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mi_layer_scores(&mi, None).unwrap(), vec![4.0, 6.0]);
        assert_eq!(
            score_mi(std::slice::from_ref(&mi), &[vec![false, true]]).unwrap(),
            vec![vec![3.0, 4.0]]
        );
        let zero = MIMatrix::new(1, 2, 3, vec![0.0; 6]);
        assert_eq!(mi_layer_scores(&zero, None).unwrap(), vec![0.0; 3]);
        assert!(mi_layer_scores(&mi, Some(&[true])).is_err());
    }

    #[test]
    fn magnitude_bases() {
        // hidden rows [3,4] and [1,0]; output columns [1,0] and [2,2].
        let hidden = LinearLayer::new(
            2,
            2,
            vec![3.0, 4.0, 1.0, 0.0],
            vec![0.0; 2],
            Activation::Relu,
        )
        .unwrap();
        let out = LinearLayer::new(
            2,
            2,
            vec![1.0, 2.0, 0.0, 2.0],
            vec![0.0; 2],
            Activation::Identity,
        )
        .unwrap();
        let net = Network::new(2, vec![hidden, out]).unwrap();
        assert_eq!(
            score_magnitude_with(&net, MagnitudeBasis::Incoming),
            vec![vec![5.0, 1.0]]
        );
        assert_eq!(
            score_magnitude_with(&net, MagnitudeBasis::Outgoing),
            vec![vec![1.0, 8f64.sqrt()]]
        );
        assert_eq!(
            score_magnitude_with(&net, MagnitudeBasis::Both),
            vec![vec![26f64.sqrt(), 3.0]]
        );
    }

    #[test]
    fn magnitude_is_row_norm() {
        let hidden = LinearLayer::new(
            2,
            3,
            vec![3.0, 4.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0; 3],
            Activation::Relu,
        )
        .unwrap();
        let out = LinearLayer::new(3, 1, vec![1.0; 3], vec![0.0], Activation::Identity).unwrap();
        assert_eq!(
            score_magnitude(&two_layer(hidden, out)),
            vec![vec![5.0, 1.0, 0.0]]
        );
    }

    #[test]
    fn random_scores_are_seeded_and_open() {
        let net = Network::init(&[3, 4, 2], 0).unwrap();
        let a = score_random(&net, 7);
        assert_eq!(a, score_random(&net, 7));
        assert_ne!(a, score_random(&net, 8));
        assert_eq!(a[0].len(), 4);
        assert!(a[0].iter().all(|&v| v > 0.0 && v < 1.0));
    }

    fn trace_from_hidden(cols: &[Vec<f64>]) -> ActivationTrace {
        // Build a trace whose hidden layer holds exactly `cols`, by using an
        // identity hidden layer on a hand-made input.
        let width = cols.len();
        let mut w = vec![0.0f32; width * width];
        for d in 0..width {
            w[d * width + d] = 1.0;
        }
        let hidden =
            LinearLayer::new(width, width, w, vec![0.0; width], Activation::Identity).unwrap();
        let out =
            LinearLayer::new(width, 1, vec![1.0; width], vec![0.0], Activation::Identity).unwrap();
        let net = two_layer(hidden, out);
        let s = cols[0].len();
        let x = Matrix::from_vec(
            s,
            width,
            (0..s)
                .flat_map(|r| cols.iter().map(move |c| c[r]))
                .collect(),
        );
        // Round-trip through the trace format with handcrafted layers.
        let raw = net.forward(&x).unwrap();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"MIPT");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&(s as u32).to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        for m in std::iter::once(&x).chain(raw.iter()) {
            bytes.extend_from_slice(&(m.cols() as u32).to_le_bytes());
            let mut ranges = Vec::new();
            for c in 0..m.cols() {
                let col = m.column(c);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                ranges.push((lo, hi));
                bytes.extend_from_slice(&(lo as f32).to_le_bytes());
                bytes.extend_from_slice(&(hi as f32).to_le_bytes());
            }
            for r in 0..m.rows() {
                for (c, &(lo, hi)) in ranges.iter().enumerate() {
                    let v = if hi > lo {
                        (m.get(r, c) - lo) / (hi - lo)
                    } else {
                        0.5
                    };
                    bytes.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        ActivationTrace::from_bytes(&bytes).unwrap()
    }

    #[test]
    fn duplicated_and_negated_neurons_are_redundant() {
        let a: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let other: Vec<f64> = (0..50).map(|i| ((i * 13) % 7) as f64).collect();
        let t = trace_from_hidden(&[a.clone(), a.clone(), other.clone()]);
        let s = &score_correlation(&t)[0];
        assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
        assert!(s[2] > 0.1);
        let t = trace_from_hidden(&[a, neg, other]);
        let s = &score_correlation(&t)[0];
        assert!(s[0].abs() < 1e-12 && s[1].abs() < 1e-12);
    }

    #[test]
    fn constant_and_lone_neurons() {
        let a: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let t = trace_from_hidden(&[a.clone(), vec![3.0; 20]]);
        let s = &score_correlation(&t)[0];
        assert_eq!(s[1], 0.0);
        assert_eq!(s[0], 1.0);
        let t = trace_from_hidden(&[a]);
        assert_eq!(score_correlation(&t), vec![vec![1.0]]);
    }

    #[test]
    fn independent_columns_score_high() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let t = trace_from_hidden(&[a, b]);
        let s = &score_correlation(&t)[0];
        assert!(s[0] >= 0.9 && s[1] >= 0.9, "{s:?}");
    }

    #[test]
    fn correlation_scores_real_trace_shapes() {
        let net = Network::init(&[3, 5, 4, 2], 2).unwrap();
        let t = record_trace(
            &net,
            &ProbeConfig {
                num_samples: 100,
                ..Default::default()
            },
        )
        .unwrap();
        let s = score_correlation(&t);
        assert_eq!(s.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 4]);
        assert!(s.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn weight_similarity_duplicates_are_free() {
        let hidden = LinearLayer::new(
            2,
            3,
            vec![1.0, 2.0, 1.0, 2.0, -3.0, 0.5],
            vec![0.1, 0.1, 0.0],
            Activation::Relu,
        )
        .unwrap();
        let out = LinearLayer::new(
            3,
            2,
            vec![1.0, 1.0, 1.0, 2.0, 0.5, -1.0],
            vec![0.0; 2],
            Activation::Identity,
        )
        .unwrap();
        let s = &score_weight_similarity(&two_layer(hidden, out))[0];
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 0.0);
        assert!(s[2] > 0.0);
    }

    #[test]
    fn weight_similarity_zero_outgoing_neighbour() {
        // Neuron 1 has no outgoing weights, so merging anything into it is free.
        let hidden =
            LinearLayer::new(1, 2, vec![1.0, 5.0], vec![0.0, 0.0], Activation::Relu).unwrap();
        let out = LinearLayer::new(2, 1, vec![2.0, 0.0], vec![0.0], Activation::Identity).unwrap();
        let s = &score_weight_similarity(&two_layer(hidden, out))[0];
        assert_eq!(s[0], 0.0);
        assert_eq!(s[1], 4.0 * 16.0);
    }

    #[test]
    fn weight_similarity_hand_example() {
        // w (row + bias): w0 = (1, 0 | 0), w1 = (0, 1 | 0), w2 = (2, 0 | 1)
        // |a|^2 from next layer columns: a0 = (1, 1) -> 2, a1 = (2, 0) -> 4, a2 = (0, 3) -> 9
        // s0 = min(4 * |w0-w1|^2, 9 * |w0-w2|^2) = min(4 * 2, 9 * 2) = 8
        // s1 = min(2 * |w1-w0|^2, 9 * |w1-w2|^2) = min(2 * 2, 9 * 6) = 4
        // s2 = min(2 * |w2-w0|^2, 4 * |w2-w1|^2) = min(2 * 2, 4 * 6) = 4
        let hidden = LinearLayer::new(
            2,
            3,
            vec![1.0, 0.0, 0.0, 1.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
            Activation::Relu,
        )
        .unwrap();
        let out = LinearLayer::new(
            3,
            2,
            vec![1.0, 2.0, 0.0, 1.0, 0.0, 3.0],
            vec![0.0; 2],
            Activation::Identity,
        )
        .unwrap();
        assert_eq!(
            score_weight_similarity(&two_layer(hidden, out)),
            vec![vec![8.0, 4.0, 4.0]]
        );
    }

    #[test]
    fn scores_csv_layout() {
        let s = Scores {
            method: Method::Magnitude,
            per_layer: vec![vec![0.5, 2.0]],
        };
        let mut buf = Vec::new();
        write_scores_csv(&[s], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "method,layer,neuron,score\nmagnitude,1,0,0.5\nmagnitude,1,1,2\n"
        );
    }
}
