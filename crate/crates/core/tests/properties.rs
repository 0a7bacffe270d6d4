mod common;

use mep_prune::harness::{kendall_tau, spearman};
use mep_prune::mi::{
    binned_entropy, joint_histogram, mutual_information, HistogramConfig, MIMatrix,
};
use mep_prune::nn::{Activation, LinearLayer, Network};
use mep_prune::probe::{record_trace, ProbeConfig};
use mep_prune::prune::{
    apply_plan, make_plan, mi_layer_scores, removal_count, schedule, score_magnitude, PrunePlan,
};
use mep_prune::Matrix;
use proptest::prelude::*;

use common::{masked_forward, plain_forward, random_network, random_plan, rng};

fn unit_column(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64], len)
}

fn paired_columns() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize)> {
    (1usize..80, 2usize..40).prop_flat_map(|(s, b)| (unit_column(s), unit_column(s), Just(b)))
}

fn dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..7, 3..6)
}

fn argsort(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    idx
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn forward_matches_scalar_oracle(d in dims(), seed in any::<u64>(), batch in 1usize..6) {
        let mut r = rng(seed);
        let net = random_network(&mut r, &d);
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|i| (0..d[0]).map(|j| ((seed as f64 + (i * 7 + j) as f64) * 0.37).sin() * 3.0).collect())
            .collect();
        let outs = net.forward(&Matrix::from_rows(&xs)).unwrap();
        prop_assert_eq!(outs.len(), d.len() - 1);
        for (i, x) in xs.iter().enumerate() {
            let want = plain_forward(&net, x);
            for (k, w) in want.iter().enumerate() {
                prop_assert!((outs.last().unwrap().get(i, k) - w).abs() <= 1e-6);
            }
        }
        for hidden in &outs[..outs.len() - 1] {
            prop_assert!(hidden.as_slice().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn mi_symmetric_nonnegative_and_bounded_by_entropy((x, y, b) in paired_columns()) {
        let cfg = HistogramConfig { bins: b };
        let h = joint_histogram(&x, &y, &cfg).unwrap();
        prop_assert_eq!(h.counts().iter().sum::<u64>(), x.len() as u64);
        let m = mutual_information(&h);
        prop_assert!(m >= 0.0);
        prop_assert!((m - mutual_information(&h.transpose())).abs() <= 1e-12);
        prop_assert!((m - mutual_information(&joint_histogram(&y, &x, &cfg).unwrap())).abs() <= 1e-12);
        let hx = binned_entropy(&x, &cfg).unwrap();
        let hy = binned_entropy(&y, &cfg).unwrap();
        prop_assert!(m <= hx.min(hy) + 1e-12);
        let self_mi = mutual_information(&joint_histogram(&x, &x, &cfg).unwrap());
        prop_assert!((self_mi - hx).abs() <= 1e-12);
    }

    #[test]
    fn rank_metrics_invariant_under_permutation_and_monotone_maps(
        pairs in prop::collection::vec((0i32..8, 0i32..8), 2..25),
        perm_seed in any::<u64>(),
    ) {
        let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let (s, k) = (spearman(&a, &b), kendall_tau(&a, &b));
        for v in [s, k].into_iter().flatten() {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        }
        let mut perm: Vec<usize> = (0..a.len()).collect();
        let mut r = rng(perm_seed);
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut r);
        let pa: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
        let ma: Vec<f64> = a.iter().map(|v| v.powi(3) + (v / 2.0).exp()).collect();
        let mb: Vec<f64> = b.iter().map(|v| 0.5 * v - 10.0).collect();
        let same = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
            (None, None) => true,
            _ => false,
        };
        prop_assert!(same(s, spearman(&pa, &pb)));
        prop_assert!(same(k, kendall_tau(&pa, &pb)));
        prop_assert!(same(s, spearman(&ma, &mb)));
        prop_assert!(same(k, kendall_tau(&ma, &mb)));
    }

    #[test]
    fn plan_removes_lowest_scores(
        scores in prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], 1..12), 1..4),
        max_rate in 0.0..1.0f64,
    ) {
        let rates = schedule(max_rate, scores.len()).unwrap();
        let emptying = scores.iter().zip(&rates).any(|(s, &r)| {
            let k = removal_count(r, s.len());
            k > 0 && k >= s.len()
        });
        let plan = make_plan(&scores, &rates);
        prop_assert_eq!(plan.is_err(), emptying);
        let Ok(plan) = plan else { return Ok(()) };
        for ((s, removed), &rate) in scores.iter().zip(&plan.removals).zip(&rates) {
            prop_assert_eq!(removed.len(), removal_count(rate, s.len()));
            prop_assert!(removed.windows(2).all(|w| w[0] < w[1]));
            for &gone in removed {
                for kept in (0..s.len()).filter(|i| !removed.contains(i)) {
                    prop_assert!(s[gone] < s[kept] || (s[gone] == s[kept] && gone < kept));
                }
            }
        }
        prop_assert_eq!(PrunePlan::from_text(&plan.to_text()).unwrap(), plan);
    }

    #[test]
    fn surgery_matches_masked_forward(d in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, &d);
        let plan = random_plan(&mut r, &net.hidden_widths());
        let pruned = apply_plan(&net, &plan).unwrap();
        for (w, (orig, removed)) in pruned.hidden_widths().iter().zip(net.hidden_widths().iter().zip(&plan.removals)) {
            prop_assert_eq!(*w, orig - removed.len());
        }
        let x: Vec<f64> = (0..d[0]).map(|j| (j as f64 + 0.5) * if seed % 2 == 0 { 1.0 } else { -0.7 }).collect();
        let got = pruned.logits(&Matrix::from_rows(std::slice::from_ref(&x))).unwrap();
        for (k, w) in masked_forward(&net, &plan, &x).iter().enumerate() {
            prop_assert!((got.get(0, k) - w).abs() <= 1e-6);
        }
    }

    #[test]
    fn masking_inputs_never_raises_mi_scores(
        n in 1usize..6, m in 1usize..6, seed in any::<u64>(), drop in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let values: Vec<f64> = (0..n * m).map(|_| rand::Rng::random::<f64>(&mut r)).collect();
        let mi = MIMatrix::new(1, n, m, values);
        let full = mi_layer_scores(&mi, None).unwrap();
        let keep: Vec<bool> = (0..n).map(|i| drop >> i & 1 == 0).collect();
        let masked = mi_layer_scores(&mi, Some(&keep)).unwrap();
        for (a, b) in masked.iter().zip(&full) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn magnitude_ranking_survives_positive_scaling(d in dims(), seed in any::<u64>(), c in 0.01f32..50.0) {
        let mut r = rng(seed);
        let net = random_network(&mut r, &d);
        let scaled_layers = net
            .layers()
            .iter()
            .map(|l| {
                let w = l.weights().iter().map(|v| v * c).collect();
                LinearLayer::new(l.in_dim(), l.out_dim(), w, l.bias().to_vec(), l.activation()).unwrap()
            })
            .collect();
        let scaled = Network::new(net.input_dim(), scaled_layers).unwrap();
        for (a, b) in score_magnitude(&net).iter().zip(&score_magnitude(&scaled)) {
            prop_assert_eq!(argsort(a), argsort(b));
        }
    }

    #[test]
    fn trace_columns_span_unit_interval(d in dims(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let net = random_network(&mut r, &d);
        let trace = record_trace(&net, &ProbeConfig { num_samples: 64, seed, ..ProbeConfig::default() }).unwrap();
        prop_assert_eq!(trace.dims(), net.dims());
        for i in 0..=net.depth() {
            let layer = trace.layer(i);
            for c in 0..layer.cols() {
                let col = layer.column(c);
                if trace.is_constant(i, c) {
                    prop_assert!(col.iter().all(|&v| v == 0.5));
                } else {
                    prop_assert!(col.contains(&0.0) && col.contains(&1.0));
                }
            }
        }
    }
}

#[test]
fn relu_hidden_identity_output() {
    let net = random_network(&mut rng(1), &[3, 4, 2]);
    assert_eq!(net.layers()[0].activation(), Activation::Relu);
    assert_eq!(net.layers()[1].activation(), Activation::Identity);
}
