mod common;

use bnnv_core::lowering::{
    neuron_row, neuron_threshold, output_pair_row, output_pair_strict_row, row_to_cardinality, NeuronThreshold,
};
use bnnv_core::model::{signed_dot, BatchNorm, InternalBlock, OutputBlock};
use num::{BigRational, Signed};
use proptest::prelude::*;

fn bits_of(m: usize, a: u32) -> Vec<bool> {
    (0..m).map(|i| a >> i & 1 != 0).collect()
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// Sign of the batch-normalized value computed on rationals, independent
/// of the library's evaluator.
fn reference_bit(block: &InternalBlock, i: usize, s: i64) -> bool {
    let bn = &block.bn;
    let y = BigRational::from_integer(s.into()) + exact(block.bias[i]);
    let z = exact(bn.alpha[i]) * (y - exact(bn.mu[i])) / exact(bn.sigma[i]) + exact(bn.gamma[i]);
    !z.is_negative()
}

fn block_strategy(max_in: usize) -> impl Strategy<Value = InternalBlock> {
    (1..=max_in).prop_flat_map(|m| {
        (
            prop::collection::vec(prop::bool::ANY, m),
            -300i64..=300,
            prop_oneof![Just(0i64), 1i64..=200, -200i64..=-1],
            -100i64..=100,
            -500i64..=500,
            1i64..=300,
        )
            .prop_map(|(w, b, a, g, mu, s)| InternalBlock {
                weights: vec![w.into_iter().map(|p| if p { 1 } else { -1 }).collect()],
                bias: vec![b as f64 / 100.0],
                bn: BatchNorm {
                    alpha: vec![a as f64 / 100.0],
                    gamma: vec![g as f64 / 100.0],
                    mu: vec![mu as f64 / 100.0],
                    sigma: vec![s as f64 / 100.0],
                },
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn neuron_thresholds_match_real_sign(block in block_strategy(10)) {
        let m = block.in_dim();
        let t = neuron_threshold(&block, 0);
        let row = neuron_row(&block, 0);
        for a in 0..1u32 << m {
            let bits = bits_of(m, a);
            let s = signed_dot(&block.weights[0], &bits);
            let expected = reference_bit(&block, 0, s);
            prop_assert_eq!(t.holds(s), expected);
            prop_assert_eq!(block.bn.bit(0, s, block.bias[0]), expected);
            if let Some(r) = &row {
                prop_assert_eq!(r.holds(&bits), expected);
            } else {
                prop_assert!(matches!(t, NeuronThreshold::Const(_)));
            }
        }
    }

    #[test]
    fn halving_is_exact(w in prop::collection::vec(prop::bool::ANY, 1..=10), c in -12i64..=12) {
        let a: Vec<i8> = w.iter().map(|&p| if p { 1 } else { -1 }).collect();
        let row = row_to_cardinality(&a, c);
        for x in 0..1u32 << a.len() {
            let bits = bits_of(a.len(), x);
            prop_assert_eq!(row.holds(&bits), signed_dot(&a, &bits) >= c);
        }
    }

    #[test]
    fn pair_rows_match_scores(
        rows in prop::collection::vec(prop::collection::vec(prop::bool::ANY, 6), 3),
        bias in prop::collection::vec(-40i64..=40, 3),
    ) {
        let out = OutputBlock {
            weights: rows.iter().map(|r| r.iter().map(|&p| if p { 1 } else { -1 }).collect()).collect(),
            // quarter steps make score ties common
            bias: bias.iter().map(|&b| b as f64 / 4.0).collect(),
        };
        for i in 0..3 {
            for j in (0..3).filter(|&j| j != i) {
                let ge = output_pair_row(&out, i, j);
                let gt = output_pair_strict_row(&out, i, j);
                for x in 0..64u32 {
                    let bits = bits_of(6, x);
                    let wi = signed_dot(&out.weights[i], &bits) as f64 + out.bias[i];
                    let wj = signed_dot(&out.weights[j], &bits) as f64 + out.bias[j];
                    prop_assert_eq!(ge.holds(&bits), wi >= wj);
                    prop_assert_eq!(gt.holds(&bits), wi > wj);
                }
            }
        }
    }
}

#[test]
fn exhaustive_halving_for_twelve_inputs() {
    let mut rng = common::rng(5);
    use rand::Rng;
    for _ in 0..20 {
        let a: Vec<i8> = (0..12).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let c = rng.gen_range(-13..=13);
        let row = row_to_cardinality(&a, c);
        for x in 0..1u32 << 12 {
            let bits = bits_of(12, x);
            assert_eq!(row.holds(&bits), signed_dot(&a, &bits) >= c);
        }
    }
}

#[test]
fn tiny_alpha_saturates() {
    let block = InternalBlock {
        weights: vec![vec![1, 1, -1]],
        bias: vec![0.0],
        bn: BatchNorm {
            alpha: vec![1e-300],
            gamma: vec![1e-3],
            mu: vec![0.0],
            sigma: vec![1.0],
        },
    };
    // the cut point is around -1e297: every input is above it
    let row = neuron_row(&block, 0).unwrap();
    assert!(row.d <= 0);
    for x in 0..8u32 {
        let bits = bits_of(3, x);
        assert!(block.bn.bit(0, signed_dot(&block.weights[0], &bits), 0.0));
    }
}
