mod common;

use common::{binary, loss_gradient_errors, network_gradient_error, pdf_oracle};
use ngmg_toolkit::losses::{self, bce, ngmg_entropy, ngmg_weights, shannon, LossName, NgmgMode};
use ngmg_toolkit::net::{self, Activation, Mlp, Sample, TrainConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn loss_examples() {
    assert!((shannon(&[1.0, 0.0], &[0.5, 0.5]).unwrap().value - LN2).abs() < 1e-15);
    assert!(shannon(&[0.0, 1.0], &[0.0, 1.0]).unwrap().value < 1e-6);
    assert!((bce(&[1.0], &[0.5]).unwrap().value - LN2).abs() < 1e-15);
    let near = bce(&[0.0, 1.0], &[losses::PROB_CLAMP, 1.0 - losses::PROB_CLAMP]).unwrap();
    assert!(near.value < 1e-6);
    assert!(bce(&[1.0], &[0.2, 0.3]).is_err());
}

#[test]
fn ngmg_literal_two_output_example() {
    let k = net::output_kernel(2, 1.0).unwrap();
    let w = ngmg_weights(&[1.0, 0.0], &[0.5, 0.5], &k).unwrap();
    let c = pdf_oracle(1.0, 0.0, 1.0);
    assert_eq!(w.under[0], 0.0);
    assert!((w.under[1] - 0.5 * c).abs() < 1e-15);
    assert!((w.under[1] - 0.120986).abs() < 1e-6);
    let lit = ngmg_entropy(&[1.0, 0.0], &[0.5, 0.5], &k, NgmgMode::Literal, 0.0).unwrap();
    assert!((lit.value - 0.5 * c * LN2).abs() < 1e-14);
    assert!((lit.value - 0.083861).abs() < 1e-6);
}

#[test]
fn ngmg_zero_deficit_leaves_only_floor() {
    let k = net::output_kernel(4, 2.0).unwrap();
    let t = [1.0; 4];
    let p = [0.6; 4];
    let two = ngmg_entropy(&t, &p, &k, NgmgMode::TwoSided, 0.01).unwrap();
    let floor = bce(&t, &p).unwrap().value;
    assert!((two.value - 0.01 * floor).abs() < 1e-15);
    assert_eq!(ngmg_entropy(&t, &p, &k, NgmgMode::Literal, 0.01).unwrap().value, 0.0);
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for k in [1, 2, 5, 10, 40] {
        for _ in 0..20 {
            for (name, err) in loss_gradient_errors(k, &mut rng) {
                assert!(err < 1e-5, "{name} k={k}: {err}");
            }
        }
    }
}

#[test]
fn network_gradients_match_finite_differences() {
    let shapes: [&[usize]; 5] = [&[1, 3], &[2, 5, 3], &[1, 8, 8, 4], &[3, 6, 6, 6, 2], &[4, 16, 1]];
    for sizes in shapes {
        for hidden in [Activation::Relu, Activation::Tanh] {
            for out in [Activation::Sigmoid, Activation::Identity] {
                for seed in 0..5 {
                    let err = network_gradient_error(sizes, hidden, out, seed);
                    assert!(err < 1e-4, "{sizes:?} {hidden:?} {out:?} seed {seed}: {err}");
                }
            }
        }
    }
}

#[test]
fn forward_is_deterministic_per_seed() {
    let build = || Mlp::new(&[3, 7, 2], Activation::Tanh, Activation::Sigmoid, &mut ChaCha8Rng::seed_from_u64(12)).unwrap();
    let (a, b) = (build(), build());
    assert_eq!(a, b);
    let x = [0.3, -0.7, 1.1];
    assert_eq!(a.forward(&x).unwrap(), b.forward(&x).unwrap());
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = Mlp::new(&[2, 9, 9, 3], Activation::Relu, Activation::Identity, &mut rng).unwrap();
    let back = Mlp::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!(back, m);
    for _ in 0..20 {
        let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let (a, b) = (m.forward(&x).unwrap(), back.forward(&x).unwrap());
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
    assert!(Mlp::from_json("{\"layer_sizes\": [1]}").is_err());
}

fn separable_set(rng: &mut impl Rng) -> Vec<Sample> {
    (0..200)
        .map(|_| {
            let x: f64 = rng.random_range(-1.0..1.0);
            Sample {
                input: vec![x],
                target: vec![if x > 0.1 { 1.0 } else { 0.0 }],
            }
        })
        .collect()
}

#[test]
fn zero_iterations_leave_model_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = Mlp::new(&[1, 4, 1], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
    let cfg = TrainConfig {
        iterations: 0,
        ..TrainConfig::default()
    };
    let (trained, curve) = net::train(&m, &separable_set(&mut rng), &cfg).unwrap();
    assert_eq!(trained, m);
    assert!(curve.is_empty());
}

#[test]
fn training_reduces_loss_and_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = separable_set(&mut rng);
    let m = Mlp::new(&[1, 16, 1], Activation::Tanh, Activation::Sigmoid, &mut rng).unwrap();
    for loss_name in [LossName::Bce, LossName::NgmgTwoSided, LossName::Mse] {
        let cfg = TrainConfig {
            learning_rate: 0.5,
            iterations: 1500,
            seed: 17,
            loss_name,
            ..TrainConfig::default()
        };
        let (a, curve_a) = net::train(&m, &data, &cfg).unwrap();
        let (b, curve_b) = net::train(&m, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(curve_a, curve_b);
        assert!(curve_a.iter().all(|v| v.is_finite()));
        let head: f64 = curve_a[..50].iter().sum::<f64>() / 50.0;
        let tail: f64 = curve_a[curve_a.len() - 50..].iter().sum::<f64>() / 50.0;
        assert!(tail < head, "{loss_name}: {tail} !< {head}");
    }
}

#[test]
fn training_rejects_bad_inputs() {
    let m = Mlp::zeros(&[2, 1], Activation::Relu, Activation::Sigmoid).unwrap();
    assert!(net::train(&m, &[], &TrainConfig::default()).is_err());
    let wrong = [Sample {
        input: vec![1.0],
        target: vec![1.0],
    }];
    assert!(net::train(&m, &wrong, &TrainConfig::default()).is_err());
    let cfg = TrainConfig {
        learning_rate: 0.0,
        ..TrainConfig::default()
    };
    let ok = [Sample {
        input: vec![1.0, 0.0],
        target: vec![1.0],
    }];
    assert!(net::train(&m, &ok, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn two_sided_loss_is_nonnegative(seed in any::<u64>(), k in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let t = binary(k, &mut rng);
        let kern = net::output_kernel(k, 2.0).unwrap();
        let v = ngmg_entropy(&t, &p, &kern, NgmgMode::TwoSided, 0.01).unwrap();
        prop_assert!(v.value >= 0.0 && v.value.is_finite());
        prop_assert!(v.gradient.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn ngmg_part_vanishes_at_matching_proportions(seed in any::<u64>(), k in 1usize..20, s in 0.05f64..0.95) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = binary(k, &mut rng);
        // any positive multiple of the target normalizes to the same vector
        let p: Vec<f64> = t.iter().map(|&v| if v > 0.0 { s } else { 0.0 }).collect();
        let kern = net::output_kernel(k, 2.0).unwrap();
        let w = ngmg_weights(&t, &p, &kern).unwrap();
        // zero predictions are clamped up to PROB_CLAMP, which leaves a residual deficit of that order
        let slack = 2.0 * k as f64 * losses::PROB_CLAMP / s * kern.max_column_sum();
        prop_assert!(w.under.iter().chain(&w.over).all(|&v| v.abs() <= slack));
    }
}
