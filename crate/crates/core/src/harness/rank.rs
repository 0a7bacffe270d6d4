//! Rank correlations with tie handling.
//!
//! Both metrics return `None` when a side has no rank variance (for example a
//! constant score vector) instead of inventing a value.

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) hold ranks i+1..=j.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Pearson correlation, clamped to `[-1, 1]`.
///
/// Panics if the slices differ in length.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "correlation needs equal-length inputs");
    if a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "correlation needs equal-length inputs");
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Kendall's tau-b over all pairs.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len(), "correlation needs equal-length inputs");
    let n = a.len();
    if n < 2 {
        return None;
    }
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_a, mut tied_b) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i].total_cmp(&a[j]) as i64;
            let db = b[i].total_cmp(&b[j]) as i64;
            if da == 0 {
                tied_a += 1;
            }
            if db == 0 {
                tied_b += 1;
            }
            match da * db {
                p if p > 0 => concordant += 1,
                p if p < 0 => discordant += 1,
                _ => {}
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = ((pairs - tied_a) as f64 * (pairs - tied_b) as f64).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 2.0, 4.0, 3.0];
        assert_eq!(spearman(&a, &b), Some(0.8));
        assert_eq!(kendall_tau(&a, &b), Some(2.0 / 3.0));
    }

    #[test]
    fn identical_and_reversed() {
        let a = [0.3, -1.0, 2.5, 7.0, 0.0];
        let r: Vec<f64> = a.iter().map(|v| -v).collect();
        assert_eq!(spearman(&a, &a), Some(1.0));
        assert_eq!(kendall_tau(&a, &a), Some(1.0));
        assert_eq!(spearman(&a, &r), Some(-1.0));
        assert_eq!(kendall_tau(&a, &r), Some(-1.0));
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 5.0]),
            vec![2.5, 4.0, 2.5, 1.0]
        );
    }

    #[test]
    fn tau_b_with_ties() {
        // a has one tied pair (0,1); b none. C = 4, D = 1 over 6 pairs,
        // tau_b = 3 / sqrt(5 * 6).
        let a = [1.0, 1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 4.0, 3.0];
        let expected = 3.0 / (30.0f64).sqrt();
        assert!((kendall_tau(&a, &b).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn constant_side_is_undefined() {
        let a = [1.0, 2.0, 3.0];
        let c = [4.0, 4.0, 4.0];
        assert_eq!(spearman(&a, &c), None);
        assert_eq!(kendall_tau(&c, &a), None);
        assert_eq!(spearman(&[1.0], &[2.0]), None);
    }
}
