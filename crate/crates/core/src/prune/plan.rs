use std::fmt::Write as _;

use crate::error::FormatError;
use crate::{Error, Result};

/// Which hidden neurons to delete. Index `h - 1` describes hidden layer `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunePlan {
    pub per_layer_rate: Vec<f64>,
    /// Sorted, duplicate-free neuron indices per hidden layer.
    pub removals: Vec<Vec<usize>>,
}

impl PrunePlan {
    pub fn empty(hidden_widths: &[usize]) -> Self {
        Self {
            per_layer_rate: vec![0.0; hidden_widths.len()],
            removals: vec![Vec::new(); hidden_widths.len()],
        }
    }

    pub fn total_removed(&self) -> usize {
        self.removals.iter().map(Vec::len).sum()
    }

    /// Text form, one line per hidden layer:
    /// `layer <h> remove <i,j,...> rate <r>`, with `-` for an empty list.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (h, (rate, idx)) in self.per_layer_rate.iter().zip(&self.removals).enumerate() {
            let list = if idx.is_empty() {
                "-".to_string()
            } else {
                idx.iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            };
            writeln!(s, "layer {} remove {list} rate {rate}", h + 1).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, FormatError> {
        let mut plan = PrunePlan {
            per_layer_rate: Vec::new(),
            removals: Vec::new(),
        };
        for (lineno, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let bad =
                |why: &str| FormatError::Text(format!("line {}: {why}: {line:?}", lineno + 1));
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [kw_layer, h, kw_remove, list, kw_rate, rate] = parts[..] else {
                return Err(bad("expected `layer <h> remove <list> rate <r>`"));
            };
            if (kw_layer, kw_remove, kw_rate) != ("layer", "remove", "rate") {
                return Err(bad("unexpected keyword"));
            }
            let h: usize = h.parse().map_err(|_| bad("bad layer number"))?;
            if h != plan.removals.len() + 1 {
                return Err(bad("layers must be listed in order starting at 1"));
            }
            let idx = if list == "-" {
                Vec::new()
            } else {
                list.split(',')
                    .map(|t| t.parse::<usize>().map_err(|_| bad("bad neuron index")))
                    .collect::<std::result::Result<Vec<_>, _>>()?
            };
            let rate: f64 = rate.parse().map_err(|_| bad("bad rate"))?;
            plan.removals.push(idx);
            plan.per_layer_rate.push(rate);
        }
        Ok(plan)
    }
}

/// `floor(rate * width)`. The product is nudged by 1e-9 so that rates such as
/// 0.15 whose binary form sits just below the decimal still give the decimal
/// count.
pub fn removal_count(rate: f64, width: usize) -> usize {
    ((rate * width as f64 + 1e-9).floor() as usize).min(width)
}

/// Removes the `floor(rate * width)` lowest-scored neurons of each layer.
/// Ties go to the lower index.
pub fn make_plan(scores: &[Vec<f64>], rates: &[f64]) -> Result<PrunePlan> {
    if scores.len() != rates.len() {
        return Err(Error::InvalidInput(format!(
            "{} score vectors for {} rates",
            scores.len(),
            rates.len()
        )));
    }
    let mut removals = Vec::with_capacity(scores.len());
    for (h, (s, &rate)) in scores.iter().zip(rates).enumerate() {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidConfig(format!(
                "rate {rate} for layer {} not in [0, 1]",
                h + 1
            )));
        }
        if s.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!("NaN score in layer {}", h + 1)));
        }
        let k = removal_count(rate, s.len());
        if k > 0 && k >= s.len() {
            return Err(Error::LayerEmptied {
                layer: h + 1,
                width: s.len(),
            });
        }
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[a].total_cmp(&s[b]).then(a.cmp(&b)));
        let mut removed = order[..k].to_vec();
        removed.sort_unstable();
        removals.push(removed);
    }
    Ok(PrunePlan {
        per_layer_rate: rates.to_vec(),
        removals,
    })
}
