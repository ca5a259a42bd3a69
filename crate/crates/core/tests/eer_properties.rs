mod common;

use proptest::prelude::*;
use sasv_core::metrics::{eer, split_scores, LabeledScores, Metric};
use sasv_core::synth::{synth_scores, SynthSpec};

use common::brute_force_eer;

fn ls(pos: &[f64], neg: &[f64]) -> LabeledScores<f64> {
    LabeledScores::new(pos.to_vec(), neg.to_vec()).unwrap()
}

// Small integer grids force many ties.
fn side() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec((-4i32..=4).prop_map(|v| v as f64 * 0.25), 1..=50),
        prop::collection::vec(-10.0f64..10.0, 1..=50),
    ]
}

#[test]
fn oracle_hand_examples() {
    assert_eq!(brute_force_eer(&[0.3, 0.7], &[0.3, 0.7]), 0.5);
    assert_eq!(brute_force_eer(&[0.9, 0.8], &[0.1, 0.2]), 0.0);
    assert_eq!(brute_force_eer(&[0.5], &[0.5]), 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_brute_force_oracle(pos in side(), neg in side()) {
        prop_assert_eq!(eer(&ls(&pos, &neg)).eer, brute_force_eer(&pos, &neg));
    }

    #[test]
    fn eer_is_a_rate(pos in side(), neg in side()) {
        let e = eer(&ls(&pos, &neg)).eer;
        prop_assert!((0.0..=1.0).contains(&e));
    }

    #[test]
    fn order_invariant(mut pos in side(), mut neg in side()) {
        let before = eer(&ls(&pos, &neg)).eer;
        pos.reverse();
        let mid = neg.len() / 2;
        neg.rotate_left(mid);
        prop_assert_eq!(eer(&ls(&pos, &neg)).eer, before);
    }

    #[test]
    fn swap_and_negate_symmetry(
        pos in prop::collection::vec(-10.0f64..10.0, 1..=50),
        neg in prop::collection::vec(-10.0f64..10.0, 1..=50),
    ) {
        let a = eer(&ls(&pos, &neg)).eer;
        let npos: Vec<f64> = neg.iter().map(|x| -x).collect();
        let nneg: Vec<f64> = pos.iter().map(|x| -x).collect();
        let b = eer(&ls(&npos, &nneg)).eer;
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn affine_invariance(pos in side(), neg in side(), slope in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let f = |v: &Vec<f64>| v.iter().map(|x| slope * x + shift).collect::<Vec<_>>();
        let a = eer(&ls(&pos, &neg)).eer;
        let b = eer(&ls(&f(&pos), &f(&neg))).eer;
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn strictly_increasing_transform_invariance(pos in side(), neg in side()) {
        let f = |v: &Vec<f64>| v.iter().map(|x| x * x * x + x).collect::<Vec<_>>();
        prop_assert_eq!(eer(&ls(&pos, &neg)).eer, eer(&ls(&f(&pos), &f(&neg))).eer);
    }

    #[test]
    fn sasv_negatives_are_sv_plus_spf(seed in any::<u64>(), nt in 1usize..30, nn in 0usize..30, ns in 0usize..30) {
        prop_assume!(nn + ns > 0);
        let spec = SynthSpec { n_target: nt, n_nontarget: nn, n_spoof: ns, seed, ..Default::default() };
        let (_, scores) = synth_scores::<f64>(&spec).unwrap();
        let mut union = split_scores(&scores, Metric::Sv).1;
        union.extend(split_scores(&scores, Metric::Spf).1);
        let mut sasv = split_scores(&scores, Metric::Sasv).1;
        union.sort_by(f64::total_cmp);
        sasv.sort_by(f64::total_cmp);
        prop_assert_eq!(union, sasv);
    }
}
