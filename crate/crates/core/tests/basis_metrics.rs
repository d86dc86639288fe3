mod common;

use common::{pdf_oracle, random_weights, sparse_weights};
use ngmg_toolkit::basis::{self, build_basis, density_at, fit_weights, Basis, WeightVector};
use ngmg_toolkit::metrics::{self, W1Evaluator};
use ngmg_toolkit::quadrature::TrapezoidGrid;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fit_single_point_matches_pdf_oracle() {
    let b = build_basis(5, 0.0, 4.0, 0.2, 4.0).unwrap();
    let fit = fit_weights(&b, &[2.0]).unwrap();
    let l: Vec<f64> = (0..5).map(|n| pdf_oracle(2.0, n as f64, 0.2)).collect();
    let s: f64 = l.iter().sum();
    for (w, li) in fit.weights.as_slice().iter().zip(&l) {
        assert!((w - li / s).abs() < 1e-12);
    }
    let off: f64 = fit.weights.as_slice().iter().enumerate().filter(|(i, _)| *i != 2).map(|(_, w)| w).sum();
    // neighbours one spacing away carry exp(-1/(2σ²)) each
    let e = (-12.5f64).exp();
    let expected = 2.0 * e / (1.0 + 2.0 * e + 2.0 * (-50.0f64).exp());
    assert!((off - expected).abs() < 1e-12 && off < 1e-5, "off-index mass {off}");
    assert!(!fit.degenerate);
}

#[test]
fn density_peak_matches_pdf_oracle() {
    let b = build_basis(4, -1.5, 1.5, 0.7, 4.0).unwrap();
    for n in 0..4 {
        let v = density_at(&b, &WeightVector::one_hot(4, n), b.means()[n]).unwrap();
        assert!((v - pdf_oracle(0.0, 0.0, 0.7)).abs() < 1e-14);
    }
}

#[test]
fn density_integrates_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [3, 8, 32] {
        let b = build_basis(n, -3.0, 5.0, basis::default_scale(n, -3.0, 5.0), 4.0).unwrap();
        let w = random_weights(n, &mut rng);
        // separate fine trapezoid rule, independent of the library grid
        let (lo, hi) = b.support();
        let m = 20_000;
        let h = (hi - lo) / m as f64;
        let mut total = 0.0;
        for k in 0..=m {
            let x = lo + k as f64 * h;
            let f: f64 = (0..n).map(|i| w.as_slice()[i] * pdf_oracle(x, b.means()[i], b.scale())).sum();
            total += if k == 0 || k == m { 0.5 * f } else { f };
        }
        assert!((total * h - 1.0).abs() < 1e-4, "n={n}: {}", total * h);
        let lib = b.grid(2048).unwrap().integrate(|x| density_at(&b, &w, x).unwrap());
        assert!((lib - 1.0).abs() < 1e-4);
    }
}

#[test]
fn off_index_mass_shrinks_with_scale() {
    let mut prev = f64::INFINITY;
    for sigma in [1.0, 0.7, 0.5, 0.35, 0.25, 0.15] {
        let b = build_basis(5, 0.0, 4.0, sigma, 4.0).unwrap();
        let fit = fit_weights(&b, &[2.0, 2.0, 2.0]).unwrap();
        let off = 1.0 - fit.weights.as_slice()[2];
        assert!(off < prev, "sigma {sigma}: {off} !< {prev}");
        prev = off;
    }
    assert!(prev < 1e-6);
}

#[test]
fn w1_near_point_masses() {
    let b = build_basis(2, 0.0, 1.0, 0.01, 4.0).unwrap();
    let p = WeightVector::new(vec![1.0, 0.0]).unwrap();
    let q = WeightVector::new(vec![0.0, 1.0]).unwrap();
    let ev = W1Evaluator::with_default_grid(&b).unwrap();
    let integral = ev.w1_integral(&p, &q).unwrap();
    let vectorized = ev.w1_vectorized(&p, &q).unwrap();
    assert!((integral - 1.0).abs() < 0.01);
    assert!((vectorized - 1.0).abs() < 0.01);

    // sorted-sample quantile oracle
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut xs = basis::sample_mixture(&b, &p, 5000, &mut rng).unwrap();
    let mut ys = basis::sample_mixture(&b, &q, 5000, &mut rng).unwrap();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let oracle: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / 5000.0;
    assert!((oracle - integral).abs() < 0.01);
    assert!((metrics::w1_empirical(&xs, &ys).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn w1_stochastically_ordered_pairs_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [4, 10, 40] {
        let b = build_basis(n, 0.0, 1.0, basis::default_scale(n, 0.0, 1.0), 4.0).unwrap();
        let ev = W1Evaluator::with_default_grid(&b).unwrap();
        for shift in 1..3 {
            let head = random_weights(n - shift, &mut rng);
            let mut p = head.as_slice().to_vec();
            p.extend(std::iter::repeat(0.0).take(shift));
            let mut q = vec![0.0; shift];
            q.extend_from_slice(head.as_slice());
            let (p, q) = (WeightVector::new(p).unwrap(), WeightVector::new(q).unwrap());
            let integral = ev.w1_integral(&p, &q).unwrap();
            let vectorized = ev.w1_vectorized(&p, &q).unwrap();
            assert!((integral - vectorized).abs() <= 1e-6 * integral, "{integral} vs {vectorized}");
            // a shift by k spacings moves every unit of mass k spacings; tails past the padded support are dropped
            let moved = shift as f64 * b.spacing();
            assert!((integral - moved).abs() < 1e-4 * moved, "{integral} vs {moved}");
        }
    }
}

#[test]
fn empirical_shift_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = Basis::unit_grid(6).unwrap();
    let xs = basis::sample_mixture(&b, &random_weights(6, &mut rng), 1000, &mut rng).unwrap();
    let c = 0.37;
    let ys: Vec<f64> = xs.iter().map(|x| x + c).collect();
    assert!((metrics::w1_empirical(&xs, &ys).unwrap() - c).abs() < 1e-12);
    assert_eq!(metrics::w1_empirical(&xs, &xs).unwrap(), 0.0);
}

#[test]
fn grid_weights_sum_to_length() {
    let g = TrapezoidGrid::new(-2.0, 3.0, 101).unwrap();
    let s: f64 = g.weights().iter().sum();
    assert!((s - 5.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_output_is_valid(data in prop::collection::vec(-10.0f64..10.0, 1..200), n in 2usize..40) {
        let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        let b = build_basis(n, lo, hi, basis::default_scale(n, lo, hi), 4.0).unwrap();
        let fit = fit_weights(&b, &data).unwrap();
        let w = fit.weights.as_slice();
        prop_assert_eq!(w.len(), n);
        prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_is_permutation_invariant(mut data in prop::collection::vec(-5.0f64..5.0, 2..100), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let b = build_basis(12, -5.0, 5.0, 0.8, 4.0).unwrap();
        let first = fit_weights(&b, &data).unwrap();
        let again = fit_weights(&b, &data).unwrap();
        prop_assert_eq!(&first, &again);
        data.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let shuffled = fit_weights(&b, &data).unwrap();
        prop_assert_eq!(first.weights.as_slice(), shuffled.weights.as_slice());
    }

    #[test]
    fn cdf_integrals_strictly_decrease(n in 2usize..64, lo in -20.0f64..20.0, width in 0.1f64..50.0, rel in 0.05f64..3.0) {
        let hi = lo + width;
        let b = build_basis(n, lo, hi, rel * width / (n - 1) as f64, 4.0).unwrap();
        let a = metrics::cdf_integrals(&b).unwrap();
        prop_assert!(a.as_slice().windows(2).all(|w| w[1] < w[0]));
        prop_assert!(a.as_slice().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn w1_symmetric_and_bounded(seed in any::<u64>(), n in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = build_basis(n, 0.0, 10.0, basis::default_scale(n, 0.0, 10.0), 4.0).unwrap();
        let ev = W1Evaluator::with_default_grid(&b).unwrap();
        let p = sparse_weights(n, &mut rng);
        let q = random_weights(n, &mut rng);
        let pq = ev.w1_integral(&p, &q).unwrap();
        prop_assert_eq!(pq, ev.w1_integral(&q, &p).unwrap());
        prop_assert!(ev.w1_vectorized(&p, &q).unwrap() <= pq + 1e-9);
        prop_assert_eq!(ev.w1_integral(&p, &p).unwrap(), 0.0);
        prop_assert!(pq > 0.0 || p == q);
    }
}
