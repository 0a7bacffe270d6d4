use std::io::Write;

use super::rank::{kendall_tau, spearman};
use crate::mi::MIMatrix;
use crate::nn::Network;
use crate::prune::{magnitude_layer_scores, mi_layer_scores};
use crate::{Error, Result};

/// Agreement between unmasked MI scores and incoming-weight magnitude for one
/// layer (`1..=L`, so the output layer is included).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerRankSimilarity {
    pub layer: usize,
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
}

pub fn rank_similarity(net: &Network, mi: &[MIMatrix]) -> Result<Vec<LayerRankSimilarity>> {
    crate::prune::check_mi_shapes(net, mi)?;
    mi.iter()
        .enumerate()
        .map(|(k, m)| {
            let mi_scores = mi_layer_scores(m, None)?;
            let mag = magnitude_layer_scores(&net.layers()[k]);
            Ok(LayerRankSimilarity {
                layer: k + 1,
                spearman: spearman(&mi_scores, &mag),
                kendall: kendall_tau(&mi_scores, &mag),
            })
        })
        .collect()
}

/// One line of the `layer,metric,mean,std` report.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReportRow {
    pub layer: usize,
    pub metric: &'static str,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

/// Mean and sample standard deviation of the per-layer similarities across
/// several `(network, MI cache)` runs, typically one per seed. Undefined
/// values are left out of the statistics; a layer with none reports missing.
pub fn rank_similarity_report(runs: &[(&Network, &[MIMatrix])]) -> Result<Vec<RankReportRow>> {
    let per_run = runs
        .iter()
        .map(|(net, mi)| rank_similarity(net, mi))
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = per_run.first() else {
        return Err(Error::InvalidInput(
            "rank report needs at least one run".into(),
        ));
    };
    let depth = first.len();
    if per_run.iter().any(|r| r.len() != depth) {
        return Err(Error::InvalidInput("runs disagree on network depth".into()));
    }
    let mut rows = Vec::with_capacity(2 * depth);
    for layer in 0..depth {
        for (metric, pick) in [
            (
                "spearman",
                (|s: &LayerRankSimilarity| s.spearman) as fn(&LayerRankSimilarity) -> Option<f64>,
            ),
            ("kendall", |s: &LayerRankSimilarity| s.kendall),
        ] {
            let values: Vec<f64> = per_run.iter().filter_map(|r| pick(&r[layer])).collect();
            let (mean, std) = mean_std(&values);
            rows.push(RankReportRow {
                layer: layer + 1,
                metric,
                mean,
                std,
            });
        }
    }
    Ok(rows)
}

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(std))
}

/// Writes `layer,metric,mean,std`; missing values are empty fields.
pub fn write_rank_report_csv<W: Write>(rows: &[RankReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["layer", "metric", "mean", "std"])?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.layer.to_string(),
            r.metric.to_string(),
            fmt(r.mean),
            fmt(r.std),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<rank report csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LinearLayer};

    fn net_with_rows(rows: Vec<f32>) -> Network {
        let hidden = LinearLayer::new(2, 4, rows, vec![0.0; 4], Activation::Relu).unwrap();
        let out = LinearLayer::new(
            4,
            2,
            vec![1.0, 2.0, 3.0, 4.0, 0.0, 1.0, 0.0, 1.0],
            vec![0.0; 2],
            Activation::Identity,
        )
        .unwrap();
        Network::new(2, vec![hidden, out]).unwrap()
    }

    #[test]
    fn hand_four_neuron_example() {
        // Magnitudes: 1, 2, 3, 4. MI column sums: 1, 2, 4, 3.
        let net = net_with_rows(vec![1.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 4.0]);
        let mi = vec![
            MIMatrix::new(1, 2, 4, vec![1.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 2.0]),
            MIMatrix::new(2, 4, 2, vec![0.1, 0.2, 0.1, 0.2, 0.1, 0.2, 0.1, 0.2]),
        ];
        let sims = rank_similarity(&net, &mi).unwrap();
        assert_eq!(sims[0].spearman, Some(0.8));
        assert_eq!(sims[0].kendall, Some(2.0 / 3.0));
        // Output layer: MI sums 0.4 / 0.8, magnitudes sqrt(30) / sqrt(2).
        assert_eq!(sims[1].spearman, Some(-1.0));
    }

    #[test]
    fn constant_scores_report_missing() {
        let net = net_with_rows(vec![1.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 4.0]);
        let mi = [
            MIMatrix::new(1, 2, 4, vec![0.0; 8]),
            MIMatrix::new(2, 4, 2, vec![0.1; 8]),
        ];
        let rows = rank_similarity_report(&[(&net, &mi[..])]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].mean, None);
        let mut buf = Vec::new();
        write_rank_report_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("layer,metric,mean,std\n1,spearman,,\n1,kendall,,\n"));
    }

    #[test]
    fn aggregates_over_runs() {
        let a = net_with_rows(vec![1.0, 0.0, 0.0, 2.0, 3.0, 0.0, 0.0, 4.0]);
        let mi = [
            MIMatrix::new(1, 2, 4, vec![1.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 2.0]),
            MIMatrix::new(2, 4, 2, vec![0.1, 0.2, 0.1, 0.2, 0.1, 0.2, 0.1, 0.2]),
        ];
        let mi_rev = [
            MIMatrix::new(1, 2, 4, vec![4.0, 3.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
            mi[1].clone(),
        ];
        let rows = rank_similarity_report(&[(&a, &mi[..]), (&a, &mi_rev[..])]).unwrap();
        // Layer 1 spearman over runs: 0.8 and -1.0.
        assert!((rows[0].mean.unwrap() - (-0.1)).abs() < 1e-12);
        let sd = ((0.9f64.powi(2) * 2.0) / 1.0).sqrt();
        assert!((rows[0].std.unwrap() - sd).abs() < 1e-12);
    }
}
