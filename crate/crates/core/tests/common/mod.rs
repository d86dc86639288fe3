#![allow(dead_code)]

use ngmg_toolkit::basis::WeightVector;
use ngmg_toolkit::losses::{bce, mse, ngmg_entropy_with_weights, ngmg_weights, shannon, NgmgMode};
use ngmg_toolkit::net::{self, Activation, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, Normal};

/// Independent normal pdf.
pub fn pdf_oracle(x: f64, mean: f64, sd: f64) -> f64 {
    Normal::new(mean, sd).unwrap().pdf(x)
}

/// Random probability vector with strictly positive entries.
pub fn random_weights(n: usize, rng: &mut impl Rng) -> WeightVector {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    WeightVector::new(raw.into_iter().map(|v| v / s).collect()).unwrap()
}

/// Random probability vector where some entries are exactly zero.
pub fn sparse_weights(n: usize, rng: &mut impl Rng) -> WeightVector {
    let mut raw: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
        .collect();
    if raw.iter().all(|&v| v == 0.0) {
        raw[0] = 1.0;
    }
    let s: f64 = raw.iter().sum();
    WeightVector::new(raw.into_iter().map(|v| v / s).collect()).unwrap()
}

/// Central differences of `f` at `x`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest relative error, with an absolute floor for tiny entries.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Entries far below the largest one are compared at this absolute scale.
pub fn floor(g: &[f64]) -> f64 {
    1e-3 * g.iter().fold(1e-12f64, |m, v| m.max(v.abs()))
}

pub fn set_param(m: &mut Mlp, layer: usize, idx: usize, v: f64) {
    let l = &mut m.layers_mut()[layer];
    if idx < l.weights.len() {
        l.weights[idx] = v;
    } else {
        l.biases[idx - l.weights.len()] = v;
    }
}

pub fn get_param(m: &Mlp, layer: usize, idx: usize) -> f64 {
    let l = &m.layers()[layer];
    if idx < l.weights.len() {
        l.weights[idx]
    } else {
        l.biases[idx - l.weights.len()]
    }
}

/// Max relative error of backprop against central differences for a random
/// network, input and upstream vector. Covers parameters and the input.
pub fn network_gradient_error(sizes: &[usize], hidden: Activation, out: Activation, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Mlp::new(sizes, hidden, out, &mut rng).unwrap();
    let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
    let up: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let objective = |m: &Mlp, x: &[f64]| -> f64 { m.forward(x).unwrap().iter().zip(&up).map(|(a, b)| a * b).sum() };

    let (grads, dx) = m.backward_with_input(&m.forward_cache(&x).unwrap(), &up, &[]).unwrap();
    let h = 1e-6;
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for layer in 0..m.layers().len() {
        let count = m.layers()[layer].weights.len() + m.layers()[layer].biases.len();
        for idx in 0..count {
            let orig = get_param(&m, layer, idx);
            set_param(&mut m, layer, idx, orig + h);
            let f_up = objective(&m, &x);
            set_param(&mut m, layer, idx, orig - h);
            let f_down = objective(&m, &x);
            set_param(&mut m, layer, idx, orig);
            numeric.push((f_up - f_down) / (2.0 * h));
            let nw = grads.weights[layer].len();
            analytic.push(if idx < nw { grads.weights[layer][idx] } else { grads.biases[layer][idx - nw] });
        }
    }
    analytic.extend(&dx);
    numeric.extend(central_diff(|xi| objective(&m, xi), &x, h));
    max_rel_err(&analytic, &numeric, floor(&analytic))
}

fn predictions(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(0.05..0.95)).collect()
}

pub fn binary(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut t: Vec<f64> = (0..k).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
    if t.iter().all(|&v| v == 0.0) {
        t[0] = 1.0;
    }
    t
}

/// Relative error of every loss gradient against central differences at one
/// random (target, prediction) pair of width `k`.
pub fn loss_gradient_errors(k: usize, rng: &mut impl Rng) -> Vec<(&'static str, f64)> {
    let p = predictions(k, rng);
    let t = binary(k, rng);
    let h = 1e-6;
    let check = |g: &[f64], f: &dyn Fn(&[f64]) -> f64| max_rel_err(g, &central_diff(f, &p, h), floor(g));

    let mut out = vec![
        ("shannon", check(&shannon(&t, &p).unwrap().gradient, &|x| shannon(&t, x).unwrap().value)),
        ("bce", check(&bce(&t, &p).unwrap().gradient, &|x| bce(&t, x).unwrap().value)),
        ("mse", check(&mse(&t, &p).unwrap().gradient, &|x| mse(&t, x).unwrap().value)),
    ];
    let kern = net::output_kernel(k, 1.5).unwrap();
    let w = ngmg_weights(&t, &p, &kern).unwrap();
    for (name, mode) in [("ngmg_literal", NgmgMode::Literal), ("ngmg_two_sided", NgmgMode::TwoSided)] {
        let g = ngmg_entropy_with_weights(&t, &p, &w, mode, 0.01).unwrap().gradient;
        out.push((name, check(&g, &|x| ngmg_entropy_with_weights(&t, x, &w, mode, 0.01).unwrap().value)));
    }
    out
}
