mod support;

use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sandpile_core::group::enumerate_recurrent;
use sandpile_core::harmonic::{check_in_xh, homoclinic, mahler, torus_dist, xi, TorusWindow};
use sandpile_core::laurent::ExpansiveMethod;
use sandpile_core::subshift::{pattern_admissible, PatternModel};
use sandpile_core::{Config, Exec, LaurentPoly, TopplingMatrix, Window};
use support::*;

fn window_for(dim: usize, a: i64, b: i64) -> Window {
    if dim == 1 {
        Window::interval(1, a)
    } else {
        Window::boxed(&[(0, a - 1), (0, b - 1)])
    }
}

/// Random sandpile polynomial: negative coefficients on a random support
/// of radius ≤ 2, centre one above their total.
fn random_sandpile(rng: &mut ChaCha8Rng, dim: usize) -> LaurentPoly {
    let mut terms: Vec<(Vec<i64>, i64)> = Vec::new();
    let mut total = 0;
    for _ in 0..rng.random_range(1..=4) {
        let e: Vec<i64> = (0..dim).map(|_| rng.random_range(-2..=2)).collect();
        if e.iter().all(|&x| x == 0) || terms.iter().any(|(t, _)| *t == e) {
            continue;
        }
        let c = rng.random_range(1..=3);
        total += c;
        terms.push((e, -c));
    }
    terms.push((vec![0; dim], total + rng.random_range(1..=3)));
    LaurentPoly::from_terms(dim, terms).unwrap()
}

fn random_poly(rng: &mut ChaCha8Rng, dim: usize) -> LaurentPoly {
    let terms: Vec<(Vec<i64>, i64)> = (0..rng.random_range(1..=4))
        .map(|_| ((0..dim).map(|_| rng.random_range(-2..=2)).collect(), rng.random_range(-4..=4)))
        .collect();
    LaurentPoly::from_terms(dim, terms).unwrap()
}

#[test]
fn abelian_property_and_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let polys = reference_polys();
    for trial in 0..200 {
        let h = &polys[trial % polys.len()];
        let w = window_for(h.dim(), rng.random_range(1..=5), rng.random_range(1..=3));
        let tm = TopplingMatrix::from_poly(h, &w).unwrap();
        let v: Vec<i64> = tm.diag().iter().map(|&d| rng.random_range(0..3 * d)).collect();
        let reference = tm.stabilize(&v).unwrap();
        let back: Vec<i64> = reference.stable.iter().zip(tm.apply(&reference.odometer)).map(|(a, b)| a + b).collect();
        assert_eq!(back, v, "conservation");
        for _ in 0..10 {
            let seed: u64 = rng.random();
            let mut order = ChaCha8Rng::seed_from_u64(seed);
            let r = tm
                .stabilize_with(&v, |unstable| {
                    let mut idx: Vec<usize> = (0..unstable.len()).collect();
                    idx.shuffle(&mut order);
                    idx[0]
                })
                .unwrap();
            assert_eq!(r, reference);
        }
    }
}

#[test]
fn each_toppling_dissipates_its_column_sum() {
    let h = &reference_polys()[1];
    let tm = TopplingMatrix::from_poly(h, &Window::interval(1, 5)).unwrap();
    let v = vec![9, 12, 7, 20, 8];
    for i in 0..5 {
        if v[i] >= tm.diag()[i] {
            let after = tm.topple(&v, i).unwrap();
            let col: i64 = (0..5).map(|r| tm.matrix().get(r, i)).sum();
            assert!(col > 0);
            assert_eq!(v.iter().sum::<i64>() - after.iter().sum::<i64>(), col);
        }
    }
}

#[test]
fn burning_matches_closure_oracle() {
    for h in reference_polys() {
        for (a, b) in [(1, 1), (2, 1), (3, 1), (4, 1), (2, 2)] {
            if h.dim() == 1 && b > 1 {
                continue;
            }
            let tm = TopplingMatrix::from_poly(&h, &window_for(h.dim(), a, b)).unwrap();
            let closure = recurrent_by_closure(&tm);
            for v in all_stable(&tm) {
                assert_eq!(tm.is_recurrent_burning(&v).unwrap(), closure.contains(&v), "{h} {v:?}");
            }
        }
    }
}

#[test]
fn recurrent_count_is_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut polys = reference_polys();
    polys.push(p("7-u1-2u1^-1-u2-u2^-1"));
    let mut windows = 0;
    for h in &polys {
        for _ in 0..4 {
            let w = window_for(h.dim(), rng.random_range(1..=4), rng.random_range(1..=2));
            let tm = TopplingMatrix::from_poly(h, &w).unwrap();
            let g = enumerate_recurrent(&tm, Exec::default()).unwrap();
            assert!(g.order_matches_det(), "{h} on {w:?}");
            windows += 1;
        }
    }
    assert!(windows >= 10);
}

#[test]
fn group_axioms_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for h in reference_polys() {
        let tm = TopplingMatrix::from_poly(&h, &window_for(h.dim(), 3, 2)).unwrap();
        let g = enumerate_recurrent(&tm, Exec::default()).unwrap();
        let e = g.identity().to_vec();
        for _ in 0..50 {
            let [a, b, c] = [0; 3].map(|_| g.sample(&mut rng).to_vec());
            let ab_c = g.add(&g.add(&a, &b).unwrap(), &c).unwrap();
            let a_bc = g.add(&a, &g.add(&b, &c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc);
            assert!(g.contains(&g.add(&a, &b).unwrap()));
            assert_eq!(g.add(&a, &e).unwrap(), a);
            let inv = g.inverse(&a).unwrap();
            assert_eq!(g.add(&a, &inv).unwrap(), e);
            assert_eq!(inv, g.inverse_by_cycling(&a).unwrap());
        }
    }
}

#[test]
fn associated_products_are_sandpile() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dim in 1..=3 {
        for _ in 0..20 {
            let g = random_sandpile(&mut rng, dim);
            let f = g.associated_plus().unwrap();
            assert!(f.mul(&g).unwrap().classify().unwrap().sandpile, "g = {g}");
        }
    }
}

#[test]
fn lopsided_polys_certified_by_shortcut() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for dim in 1..=2 {
        for _ in 0..30 {
            let h = random_sandpile(&mut rng, dim);
            let c = h.expansiveness_certificate(32);
            assert!(c.expansive && c.method == ExpansiveMethod::Lopsided);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn reflect_is_a_ring_homomorphism(seed in any::<u64>(), dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_poly(&mut rng, dim), random_poly(&mut rng, dim));
        prop_assert_eq!(a.mul(&b).unwrap().reflect(), a.reflect().mul(&b.reflect()).unwrap());
        prop_assert_eq!(a.reflect().reflect(), a.clone());
        prop_assert_eq!(a.add(&b).unwrap().reflect(), a.reflect().add(&b.reflect()).unwrap());
    }

    #[test]
    fn torus_evaluation_is_multiplicative(seed in any::<u64>(), t in prop::collection::vec(0.0f64..1.0, 2)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_poly(&mut rng, 2), random_poly(&mut rng, 2));
        let lhs = a.mul(&b).unwrap().eval_torus(&t);
        let rhs = a.eval_torus(&t) * b.eval_torus(&t);
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn kernel_inverts_h_on_finite_support(seed in any::<u64>()) {
        let h = p("-2u^-2-3u^-1+8-u-u^2");
        let k = homoclinic(&h, 1e-12, 256).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: HashMap<Vec<i64>, i64> = (-3..=3).map(|n| (vec![n], rng.random_range(-5..=5))).collect();
        let eval = Window::interval(-8, 8);
        let r = xi(&v, &k, &eval, 1e-8).unwrap();
        // h·(w·v) = v, evaluated where the support of h fits
        for n in -6..=6i64 {
            let s: f64 = h.terms().map(|(j, c)| {
                c.to_string().parse::<f64>().unwrap() * r.real[eval.index_of(&[n - j[0]]).unwrap()]
            }).sum();
            let expected = *v.get(&vec![n]).unwrap_or(&0) as f64;
            prop_assert!((s - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn mahler_is_additive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_sandpile(&mut rng, 1), random_sandpile(&mut rng, 1));
        let sum = mahler(&a, 1e-10, 1 << 12).unwrap().value + mahler(&b, 1e-10, 1 << 12).unwrap().value;
        let prod = mahler(&a.mul(&b).unwrap(), 1e-10, 1 << 12).unwrap().value;
        prop_assert!((sum - prod).abs() < 1e-9);
    }

    #[test]
    fn admissibility_is_hereditary_and_shift_invariant(
        word in prop::collection::vec(0i64..5, 1..9),
        kind in 0usize..3,
        cut in 0usize..8,
        shift in -20i64..20,
    ) {
        let (f, g) = (p("-u^-1+2"), p("2-u"));
        let model = match kind {
            0 => PatternModel::recurrent(&f.mul(&g).unwrap()).unwrap(),
            1 => PatternModel::cofactors(&f, &g).unwrap(),
            _ => PatternModel::products(&f, &g).unwrap(),
        };
        let pat = |lo: i64, w: &[i64]| Config::new(Arc::new(Window::interval(lo, lo + w.len() as i64 - 1)), w.to_vec()).unwrap();
        let ok = pattern_admissible(&pat(0, &word), &model).unwrap();
        prop_assert_eq!(pattern_admissible(&pat(shift, &word), &model).unwrap(), ok);
        if ok && word.len() > 1 {
            let c = cut % word.len();
            prop_assert!(pattern_admissible(&pat(0, &word[c..]), &model).unwrap());
            prop_assert!(pattern_admissible(&pat(0, &word[..word.len() - c]), &model).unwrap());
        }
    }

    #[test]
    fn images_of_recurrent_patterns_lie_in_the_dual_model(seed in any::<u64>()) {
        let h = p("5-2u-2u^-1");
        let tm = TopplingMatrix::from_poly(&h, &Window::interval(0, 7)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<i64> = (0..8).map(|_| rng.random_range(-20..20)).collect();
        let v = tm.representative(&x).unwrap().config;
        prop_assert!(tm.is_recurrent_burning(&v).unwrap());
        let map: HashMap<Vec<i64>, i64> = (0..8).map(|n| (vec![n], v[n as usize])).collect();
        let k = homoclinic(&h, 1e-12, 256).unwrap();
        let eval = Window::interval(-10, 17);
        let x = xi(&map, &k, &eval, 1e-8).unwrap();
        prop_assert!(check_in_xh(&x.torus, &h.reflect()).unwrap() < 1e-8);
    }
}

#[test]
fn dual_model_check_controls() {
    let h = p("5-2u-2u^-1");
    let w = Window::interval(0, 9);
    let zero = TorusWindow::new(w.clone(), vec![0.0; 10]).unwrap();
    assert_eq!(check_in_xh(&zero, &h).unwrap(), 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let random = TorusWindow::new(w, (0..10).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
    assert!(check_in_xh(&random, &h).unwrap() > 1e-3);
    assert!(TorusWindow::new(Window::interval(0, 0), vec![1.0]).is_err());
    assert!(torus_dist(0.999_999_999_9) < 1e-9);
}
