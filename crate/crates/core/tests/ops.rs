mod common;

use std::sync::Arc;

use common::{brute_force_simplex, full_random, random, rel_l2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use simplex_lab::dyadic::RegionParams;
use simplex_lab::grid::{dft, GridFunction, Preset, Spectrum};
use simplex_lab::ops::*;
use simplex_lab::symbols::{Bump1D, WhitneyGeometry};

fn from_coeffs(n: usize, period: f64, coeffs: &[(i64, C64)]) -> GridFunction {
    let mut c = vec![C64::new(0.0, 0.0); n];
    for &(k, v) in coeffs {
        c[(k + n as i64 / 2) as usize] = v;
    }
    simplex_lab::grid::idft(&Spectrum::new(c, period).unwrap())
}

#[test]
fn prefix_recursion_matches_brute_force() {
    for n in [2usize, 3] {
        for grid in [16usize, 32] {
            for seed in 0..10u64 {
                let fs: Vec<GridFunction> = (0..n).map(|j| full_random(100 * seed + j as u64, grid)).collect();
                for spec in [SimplexOpSpec::plain(n), SimplexOpSpec::alternating(n)] {
                    let fast = simplex_apply(&spec, &fs).unwrap();
                    let slow = brute_force_simplex(&spec.coefficients(), &fs);
                    assert!(rel_l2(fast.samples(), &slow) < 1e-10);
                }
            }
        }
    }
}

#[test]
fn fractional_alpha_matches_brute_force() {
    let fs: Vec<GridFunction> = (0..2).map(|j| full_random(7 + j, 16)).collect();
    let spec = SimplexOpSpec::with_alpha(2, vec![0.5, 1.5]);
    let fast = simplex_apply(&spec, &fs).unwrap();
    let slow = brute_force_simplex(&spec.coefficients(), &fs);
    assert!(rel_l2(fast.samples(), &slow) < 1e-10);
}

#[test]
fn orderings_of_distinct_modes_sum_to_product() {
    let n = 32;
    let modes = [-5i64, 2, 9];
    let fs: Vec<GridFunction> =
        modes.iter().map(|&k| GridFunction::from_preset(&Preset::PureMode { k }, n, 1.0).unwrap()).collect();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut total = vec![C64::new(0.0, 0.0); n];
    for p in perms {
        let ordered: Vec<GridFunction> = p.iter().map(|&i| fs[i].clone()).collect();
        let t = simplex_apply(&SimplexOpSpec::plain(3), &ordered).unwrap();
        for (a, b) in total.iter_mut().zip(t.samples()) {
            *a += b;
        }
    }
    let prod = full_product_reference(&fs).unwrap();
    assert!(rel_l2(&total, prod.samples()) < 1e-12);
}

#[test]
fn two_mode_orderings_sum_to_product() {
    let n = 32;
    let f = GridFunction::from_preset(&Preset::PureMode { k: 3 }, n, 1.0).unwrap();
    let g = GridFunction::from_preset(&Preset::PureMode { k: -6 }, n, 1.0).unwrap();
    let a = simplex_apply(&SimplexOpSpec::plain(2), &[f.clone(), g.clone()]).unwrap();
    let b = simplex_apply(&SimplexOpSpec::plain(2), &[g.clone(), f.clone()]).unwrap();
    let sum: Vec<C64> = a.samples().iter().zip(b.samples()).map(|(x, y)| x + y).collect();
    assert!(rel_l2(&sum, full_product_reference(&[f, g]).unwrap().samples()) < 1e-12);
}

#[test]
fn product_obeys_hoelder() {
    for seed in 0..5 {
        let fs: Vec<GridFunction> = (0..3).map(|j| random(10, seed * 3 + j, 64, 2.0)).collect();
        let p = full_product_reference(&fs).unwrap();
        let lhs = simplex_lab::grid::lp_quasinorm(&p, 2.0 / 3.0).unwrap();
        let rhs: f64 = fs.iter().map(|f| f.l2_norm()).product();
        assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}

#[test]
fn maximal_dominates_full_sum() {
    for seed in 0..5 {
        let fs: Vec<GridFunction> = (0..2).map(|j| full_random(seed * 2 + j, 32)).collect();
        let t = simplex_apply(&SimplexOpSpec::plain(2), &fs).unwrap();
        let m = maximal_apply(&SimplexOpSpec::plain(2), &fs).unwrap();
        for (a, b) in t.samples().iter().zip(m.samples()) {
            assert!(b.re + 1e-12 >= a.norm() && b.im == 0.0);
        }
        let f = &fs[0];
        let t1 = simplex_apply(&SimplexOpSpec::plain(1), std::slice::from_ref(f)).unwrap();
        let c = maximal_apply(&SimplexOpSpec::plain(1), std::slice::from_ref(f)).unwrap();
        for (a, b) in t1.samples().iter().zip(c.samples()) {
            assert!(b.re + 1e-12 >= a.norm());
        }
    }
}

#[test]
fn single_delta_two_term_matches_double_sum() {
    let (n, period) = (64usize, 1.0);
    let fs = [random(20, 1, n, period), random(20, 2, n, period)];
    let phi1 = Bump1D::on_interval(-10.0, 5.0, 0.9, Some(0.4), 6).unwrap();
    let phi2 = Bump1D::on_interval(-3.0, 12.0, 0.9, Some(0.4), 6).unwrap();
    let phi3 = Bump1D::on_interval(-8.0, 10.0, 0.9, Some(0.4), 6).unwrap();
    let plan = SeparablePlan::Multiply {
        child: Box::new(SeparablePlan::Product(vec![
            SeparablePlan::Multiply { child: Box::new(SeparablePlan::Input(0)), multiplier: Multiplier::Bump(phi1) },
            SeparablePlan::Multiply { child: Box::new(SeparablePlan::Input(1)), multiplier: Multiplier::Bump(phi2) },
        ])),
        multiplier: Multiplier::Bump(phi3),
    };
    let fast = separable_apply(&plan, &fs).unwrap();
    let (s1, s2) = (dft(&fs[0]), dft(&fs[1]));
    let mut slow = vec![C64::new(0.0, 0.0); n];
    for k1 in s1.freqs() {
        for k2 in s2.freqs() {
            let w = phi1.eval(k1 as f64 / period) * phi2.eval(k2 as f64 / period) * phi3.eval((k1 + k2) as f64 / period);
            if w == 0.0 {
                continue;
            }
            let c = s1.coeff(k1) * s2.coeff(k2) * w;
            for (m, o) in slow.iter_mut().enumerate() {
                *o += c * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((k1 + k2) * m as i64) as f64 / n as f64);
            }
        }
    }
    assert!(rel_l2(fast.samples(), &slow) < 1e-9);
}

#[test]
fn cube_family_reproduces_bilinear_simplex_off_diagonal() {
    let (n, period) = (64usize, 1.0);
    let rng_coeffs = |lo: i64, hi: i64, seed: u64| {
        let g = random(31, seed, n, period);
        let s = dft(&g);
        (lo..=hi).map(|k| (k, s.coeff(k))).collect::<Vec<_>>()
    };
    let f1 = from_coeffs(n, period, &rng_coeffs(-12, -4, 1));
    let f2 = from_coeffs(n, period, &rng_coeffs(4, 12, 2));
    let geom = WhitneyGeometry::from_params(&RegionParams::default(), 6);
    let terms = geom.term_indices((-12.0, -4.0), (4.0, 12.0)).unwrap();
    let mut total = vec![C64::new(0.0, 0.0); n];
    for t in terms {
        let g1 = geom;
        let g2 = geom;
        let plan = SeparablePlan::Product(vec![
            SeparablePlan::Multiply {
                child: Box::new(SeparablePlan::Input(0)),
                multiplier: Multiplier::Fn(Arc::new(move |y| g1.first_factor(&t, y))),
            },
            SeparablePlan::Multiply {
                child: Box::new(SeparablePlan::Input(1)),
                multiplier: Multiplier::Fn(Arc::new(move |y| g2.second_factor(&t, y))),
            },
        ]);
        let out = separable_apply(&plan, &[f1.clone(), f2.clone()]).unwrap();
        for (a, b) in total.iter_mut().zip(out.samples()) {
            *a += b;
        }
    }
    let t2 = simplex_apply(&SimplexOpSpec::plain(2), &[f1, f2]).unwrap();
    assert!(rel_l2(&total, t2.samples()) < 1e-2);
}

#[test]
fn bht_kernel_agrees_with_sign_symbol() {
    let n = 4096;
    for seed in 0..3 {
        let (f1, f2) = (random(8, seed, n, 1.0), random(8, seed + 50, n, 1.0));
        let k = bht_kernel(&f1, &f2).unwrap();
        let s = bht_symbol_apply(&f1, &f2).unwrap();
        assert!(rel_l2(k.output.samples(), s.samples()) < 1e-2);
    }
}

#[test]
fn sign_symbol_and_simplex_are_linked() {
    // χ_{ξ₁<ξ₂} = (1 - sgn(ξ₁-ξ₂))/2 off the diagonal
    let n = 64;
    let (f1, f2) = (random(12, 3, n, 1.0), random(12, 4, n, 1.0));
    let t = simplex_apply(&SimplexOpSpec::plain(2), &[f1.clone(), f2.clone()]).unwrap();
    let h = bht_symbol_apply(&f1, &f2).unwrap();
    let prod = full_product_reference(&[f1.clone(), f2.clone()]).unwrap();
    let (s1, s2) = (dft(&f1), dft(&f2));
    let diag: Vec<C64> = (0..n)
        .map(|m| {
            s1.freqs()
                .map(|k| {
                    s1.coeff(k)
                        * s2.coeff(k)
                        * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (2 * k * m as i64) as f64 / n as f64)
                })
                .sum()
        })
        .collect();
    let rebuilt: Vec<C64> = (0..n)
        .map(|m| (prod.samples()[m] - diag[m] - h.samples()[m] / C64::new(0.0, -std::f64::consts::PI)) * 0.5)
        .collect();
    assert!(rel_l2(&rebuilt, t.samples()) < 1e-10);
}

#[test]
fn degenerate_bicarleson_is_flagged() {
    let spec = SimplexOpSpec::with_alpha(2, vec![1.0, -1.0]).maximal();
    assert_eq!(spec.degenerate_runs(), vec![(0, 1)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_in_each_slot(seed in 0u64..1000, slot in 0usize..3, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let n = 16;
        let fs: Vec<GridFunction> = (0..3).map(|j| full_random(seed * 7 + j, n)).collect();
        let g = full_random(seed * 7 + 5, n);
        let spec = SimplexOpSpec::plain(3);
        let mix = fs[slot].zip_with(&g, |x, y| x * a + y * b).unwrap();
        let mut left = fs.clone();
        left[slot] = mix;
        let mut other = fs.clone();
        other[slot] = g;
        let lhs = simplex_apply(&spec, &left).unwrap();
        let r1 = simplex_apply(&spec, &fs).unwrap();
        let r2 = simplex_apply(&spec, &other).unwrap();
        let rhs: Vec<C64> = r1.samples().iter().zip(r2.samples()).map(|(x, y)| x * a + y * b).collect();
        let scale = rhs.iter().map(|c| c.norm()).fold(1e-300, f64::max);
        for (x, y) in lhs.samples().iter().zip(&rhs) {
            prop_assert!((x - y).norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn modulation_shifts_output(seed in 0u64..1000, c in -4i64..5) {
        let (n, band) = (64usize, 8usize);
        let fs: Vec<GridFunction> = (0..3).map(|j| random(band, seed * 3 + j, n, 1.0)).collect();
        let e = |k: i64, m: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k * m as i64) as f64 / n as f64);
        let shifted: Vec<GridFunction> = fs
            .iter()
            .map(|f| GridFunction::new(f.samples().iter().enumerate().map(|(m, v)| v * e(c, m)).collect(), 1.0).unwrap())
            .collect();
        let t = simplex_apply(&SimplexOpSpec::plain(3), &fs).unwrap();
        let ts = simplex_apply(&SimplexOpSpec::plain(3), &shifted).unwrap();
        let want: Vec<C64> = t.samples().iter().enumerate().map(|(m, v)| v * e(3 * c, m)).collect();
        prop_assert!(rel_l2(ts.samples(), &want) < 1e-10);
    }
}
