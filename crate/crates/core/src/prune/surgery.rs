use std::collections::HashSet;

use super::PrunePlan;
use crate::nn::{LinearLayer, Network};
use crate::{Error, Result};

/// Deletes the planned hidden neurons: their incoming rows and biases in layer
/// `h` and the matching input columns of layer `h + 1`. Dropped neurons'
/// biases are not folded downstream.
pub fn apply_plan(net: &Network, plan: &PrunePlan) -> Result<Network> {
    let hidden = net.hidden_widths();
    if plan.removals.len() > hidden.len() {
        return Err(Error::InvalidPlan(format!(
            "plan touches {} layers but only {} are hidden; output neurons cannot be removed",
            plan.removals.len(),
            hidden.len()
        )));
    }
    if plan.removals.len() != hidden.len() {
        return Err(Error::InvalidPlan(format!(
            "plan covers {} of {} hidden layers",
            plan.removals.len(),
            hidden.len()
        )));
    }

    // keep[k] lists surviving indices of x_k, k = 0..=L.
    let mut keep: Vec<Vec<usize>> = Vec::with_capacity(net.depth() + 1);
    keep.push((0..net.input_dim()).collect());
    for (h, (removed, &width)) in plan.removals.iter().zip(&hidden).enumerate() {
        let mut seen = HashSet::with_capacity(removed.len());
        for &r in removed {
            if r >= width {
                return Err(Error::InvalidPlan(format!(
                    "neuron {r} out of range for hidden layer {} of width {width}",
                    h + 1
                )));
            }
            if !seen.insert(r) {
                return Err(Error::InvalidPlan(format!(
                    "neuron {r} listed twice for hidden layer {}",
                    h + 1
                )));
            }
        }
        if seen.len() == width {
            return Err(Error::LayerEmptied {
                layer: h + 1,
                width,
            });
        }
        keep.push((0..width).filter(|i| !seen.contains(i)).collect());
    }
    keep.push((0..net.output_dim()).collect());

    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(k, layer)| {
            let (cols, rows) = (&keep[k], &keep[k + 1]);
            let mut weights = Vec::with_capacity(rows.len() * cols.len());
            for &m in rows {
                let row = layer.row(m);
                weights.extend(cols.iter().map(|&n| row[n]));
            }
            let bias = rows.iter().map(|&m| layer.bias()[m]).collect();
            LinearLayer::new(cols.len(), rows.len(), weights, bias, layer.activation())
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(net.input_dim(), layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    #[test]
    fn empty_plan_is_identity() {
        let net = Network::init(&[3, 4, 5, 2], 1).unwrap();
        let p = PrunePlan::empty(&net.hidden_widths());
        assert_eq!(apply_plan(&net, &p).unwrap(), net);
    }

    #[test]
    fn removing_one_neuron_matches_masked_forward() {
        let net = Network::init(&[2, 3, 2], 3).unwrap();
        let p = PrunePlan {
            per_layer_rate: vec![0.34],
            removals: vec![vec![1]],
        };
        let pruned = apply_plan(&net, &p).unwrap();
        assert_eq!(pruned.hidden_widths(), vec![2]);
        let x = Matrix::from_rows(&[[0.3, -1.2], [2.0, 0.5]]);
        let got = pruned.logits(&x).unwrap();
        for r in 0..2 {
            // Masked oracle: hidden unit 1 forced to zero.
            let mut h = [0.0f64; 3];
            for (m, hv) in h.iter_mut().enumerate() {
                let l = net.layer(1);
                let z = l.bias()[m] as f64
                    + (0..2)
                        .map(|n| l.weight(m, n) as f64 * x.get(r, n))
                        .sum::<f64>();
                *hv = z.max(0.0);
            }
            h[1] = 0.0;
            for o in 0..2 {
                let l = net.layer(2);
                let y =
                    l.bias()[o] as f64 + (0..3).map(|m| l.weight(o, m) as f64 * h[m]).sum::<f64>();
                assert!((y - got.get(r, o)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn invalid_plans_rejected() {
        let net = Network::init(&[2, 3, 2], 3).unwrap();
        let plan = |removals: Vec<Vec<usize>>| PrunePlan {
            per_layer_rate: vec![0.0; removals.len()],
            removals,
        };
        assert!(apply_plan(&net, &plan(vec![vec![1, 1]])).is_err());
        assert!(apply_plan(&net, &plan(vec![vec![3]])).is_err());
        assert!(apply_plan(&net, &plan(vec![vec![0, 1, 2]])).is_err());
        assert!(apply_plan(&net, &plan(vec![vec![], vec![0]])).is_err());
        assert!(apply_plan(&net, &plan(vec![])).is_err());
    }
}
