mod common;

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use simplex_lab::dyadic::ShiftedDyadicInterval;
use simplex_lab::grid::GridFunction;
use simplex_lab::tiles::*;
use simplex_lab::trees::RootedTree;
use simplex_lab::Error;

const N: usize = 4096;
const PERIOD: f64 = 32.0;

fn vt(j: i32, k: i64, ms: &[i64]) -> VectorTile {
    VectorTile::new(DyadicInterval::new(j, k), ms.iter().map(|&m| ShiftedDyadicInterval::new(-j, m, 0).unwrap()).collect())
        .unwrap()
}

fn coll(tiles: Vec<VectorTile>) -> TileCollection {
    TileCollection::new(tiles, DEFAULT_RANK1_CONSTANT).unwrap()
}

/// Packet by direct summation of its Fourier series; the profile norm by quadrature.
fn packet(t: &Tile, s: u32, shift: f64) -> Vec<C64> {
    let (a, b) = t.freq.endpoints_f64();
    let (mid, r) = (0.5 * (a + b), 0.45 * (b - a));
    let q = 20000;
    let quad: f64 = (0..q).map(|i| (1.0 - (-1.0 + 2.0 * (i as f64 + 0.5) / q as f64).powi(2)).powi(2 * s as i32)).sum::<f64>()
        * 2.0
        / q as f64;
    let norm = (r * quad).sqrt();
    let c = t.time.center() + shift * t.time.length();
    let ks: Vec<i64> = (((mid - r) * PERIOD).floor() as i64..=((mid + r) * PERIOD).ceil() as i64).collect();
    (0..N)
        .map(|m| {
            let x = m as f64 * PERIOD / N as f64;
            ks.iter()
                .map(|&k| {
                    let xi = k as f64 / PERIOD;
                    let u = (xi - mid) / r;
                    if u.abs() >= 1.0 {
                        return C64::new(0.0, 0.0);
                    }
                    C64::from_polar((1.0 - u * u).powi(s as i32) / (norm * PERIOD), 2.0 * PI * xi * (x - c))
                })
                .sum()
        })
        .collect()
}

fn ip(f: &[C64], g: &[C64]) -> C64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * (PERIOD / N as f64)
}

/// One vertex of the nested formula, averaged over `alpha` shifts.
fn vertex_sum(c: &TileCollection, inputs: impl Fn(&VectorTile) -> Vec<Vec<C64>>, alpha: usize, s: u32) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); N];
    for a in 0..alpha {
        let shift = a as f64 / alpha as f64;
        for p in &c.tiles {
            let gs = inputs(p);
            let k = gs.len();
            let mut coef = C64::new(p.time.length().powf(-(k as f64 - 1.0) / 2.0), 0.0);
            for (i, g) in gs.iter().enumerate() {
                coef *= ip(g, &packet(&p.component(i), s, shift));
            }
            for (o, v) in out.iter_mut().zip(packet(&p.component(k), s, shift)) {
                *o += coef * v / alpha as f64;
            }
        }
    }
    out
}

/// Sup-norm error relative to `max(‖b‖_∞, 1)`.
fn max_err(a: &GridFunction, b: &[C64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
    a.samples().iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn inputs(n: usize, seed: u64) -> Vec<GridFunction> {
    (0..n).map(|i| common::random(1000, seed + i as u64, N, PERIOD)).collect()
}

#[test]
fn empty_collections_give_zero() {
    let g = RootedTree::star(2).unwrap();
    let tiles: VertexTiles = HashMap::from([(g.root(), TileCollection::empty(32.0))]);
    let out = model_apply(&g, &tiles, &inputs(2, 1), 1).unwrap();
    assert!(out.samples().iter().all(|z| z.norm() == 0.0));
}

#[test]
fn single_tile_bilinear() {
    let g = RootedTree::star(2).unwrap();
    let c = coll(vec![vt(0, 10, &[1, 5, 9])]);
    let fs = inputs(2, 3);
    let tiles: VertexTiles = HashMap::from([(g.root(), c.clone())]);
    let out = model_apply(&g, &tiles, &fs, 1).unwrap();
    let p = &c.tiles[0];
    let s = DEFAULT_PACKET_ORDER;
    let coef = ip(fs[0].samples(), &packet(&p.component(0), s, 0.0)) * ip(fs[1].samples(), &packet(&p.component(1), s, 0.0));
    let want: Vec<C64> = packet(&p.component(2), s, 0.0).iter().map(|v| coef * v).collect();
    assert!(coef.norm() > 1e-3);
    assert!(max_err(&out, &want) < 1e-12, "{}", max_err(&out, &want));
}

fn height_two() -> (RootedTree, usize) {
    let g = RootedTree::from_paren("(1 (2 3))").unwrap();
    let v = g.vertex_with_span(2, 3).unwrap();
    (g, v)
}

#[test]
fn height_two_nested_formula() {
    let (g, v) = height_two();
    let s = DEFAULT_PACKET_ORDER;
    let root = coll(vec![vt(-1, 20, &[2, 6, 10])]);
    let inner = coll(vec![vt(3, 1, &[8, 54, 100])]);
    let fs = inputs(3, 11);
    let tiles: VertexTiles = HashMap::from([(g.root(), root.clone()), (v, inner.clone())]);
    let out = model_apply(&g, &tiles, &fs, 1).unwrap();

    let q = &inner.tiles[0];
    let qc = ip(fs[1].samples(), &packet(&q.component(0), s, 0.0)) * ip(fs[2].samples(), &packet(&q.component(1), s, 0.0))
        / q.time.length().sqrt();
    let t_inner: Vec<C64> = packet(&q.component(2), s, 0.0).iter().map(|x| qc * x).collect();
    let p = &root.tiles[0];
    let pc = ip(fs[0].samples(), &packet(&p.component(0), s, 0.0)) * ip(&t_inner, &packet(&p.component(1), s, 0.0))
        / p.time.length().sqrt();
    let want: Vec<C64> = packet(&p.component(2), s, 0.0).iter().map(|x| pc * x).collect();
    assert!(pc.norm() > 1e-6, "{pc}");
    assert!(max_err(&out, &want) < 1e-12, "{}", max_err(&out, &want));

    // inner tile finer than 2^gap |I_P| is cut by T_{|I|}
    let cfg = ModelConfig { scale_gap: 5, ..ModelConfig::default() };
    let cut = model_apply_with(&g, &tiles, &fs, &cfg).unwrap();
    assert!(cut.samples().iter().all(|z| z.norm() == 0.0));
}

#[test]
fn small_collections_match_nested_expansion() {
    let (g, v) = height_two();
    let s = 4;
    let root = coll(vec![vt(-1, 20, &[2, 6, 10]), vt(-1, 41, &[-5, -1, 3]), vt(-2, 3, &[0, 2, 4])]);
    let inner = coll(vec![
        vt(3, 1, &[8, 54, 100]),
        vt(3, 2, &[-40, 30, -8]),
        vt(2, 0, &[0, 20, 40]),
        vt(1, 5, &[-3, 11, 25]),
    ]);
    let fs = inputs(3, 5);
    let tiles: VertexTiles = HashMap::from([(g.root(), root.clone()), (v, inner.clone())]);
    let cfg = ModelConfig { alpha_samples: 4, scale_gap: 3, packet_order: s };
    let out = model_apply_with(&g, &tiles, &fs, &cfg).unwrap();

    let want = vertex_sum(
        &root,
        |p| {
            let keep: Vec<VectorTile> = inner.tiles.iter().filter(|q| q.time.j >= p.time.j + 3).cloned().collect();
            let t = vertex_sum(&coll(keep), |_| vec![fs[1].samples().to_vec(), fs[2].samples().to_vec()], 4, s);
            vec![fs[0].samples().to_vec(), t]
        },
        4,
        s,
    );
    let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(scale > 1e-8);
    assert!(max_err(&out, &want) < 1e-12, "{} of {scale}", max_err(&out, &want));
}

#[test]
fn form_pairs_against_last_function() {
    let g = RootedTree::star(2).unwrap();
    let c = coll(vec![vt(0, 10, &[1, 5, 9]), vt(0, 20, &[2, 6, 10])]);
    let tiles: VertexTiles = HashMap::from([(g.root(), c)]);
    let fs = inputs(2, 9);
    let out = model_apply(&g, &tiles, &fs, 1).unwrap();
    let norm2 = out.l2_norm().powi(2);
    let conj = out.map(|z| z.conj());
    let v = model_form(&g, &tiles, &fs, &conj, 1).unwrap();
    assert!((v - norm2).norm() < 1e-12 * norm2.max(1.0));
    // output spectrum lies in [9, 11); a mode at frequency 2 is orthogonal
    let mode = GridFunction::from_fn(N, PERIOD, |x| C64::from_polar(1.0, 2.0 * PI * 2.0 * x)).unwrap();
    assert!(model_form(&g, &tiles, &fs, &mode, 1).unwrap().norm() < 1e-12);
}

#[test]
fn homogeneous_in_each_slot() {
    let (g, v) = height_two();
    let root = coll(vec![vt(-1, 20, &[2, 6, 10])]);
    let inner = coll(vec![vt(3, 1, &[8, 54, 100]), vt(3, 2, &[-40, 30, -8])]);
    let tiles: VertexTiles = HashMap::from([(g.root(), root), (v, inner)]);
    let fs = inputs(3, 21);
    let base = model_apply(&g, &tiles, &fs, 2).unwrap();
    let c = C64::new(0.3, -1.7);
    for slot in 0..3 {
        let mut scaled = fs.clone();
        scaled[slot] = scaled[slot].scale(c);
        let out = model_apply(&g, &tiles, &scaled, 2).unwrap();
        let want: Vec<C64> = base.samples().iter().map(|z| c * z).collect();
        assert!(max_err(&out, &want) < 1e-12);
        let mut summed = fs.clone();
        let extra = common::random(1000, 99, N, PERIOD);
        summed[slot] = fs[slot].zip_with(&extra, |a, b| a + b).unwrap();
        let mut only = fs.clone();
        only[slot] = extra;
        let lhs = model_apply(&g, &tiles, &summed, 2).unwrap();
        let rhs = model_apply(&g, &tiles, &only, 2).unwrap();
        let want: Vec<C64> = base.samples().iter().zip(rhs.samples()).map(|(a, b)| a + b).collect();
        assert!(max_err(&lhs, &want) < 1e-12);
    }
}

#[test]
fn truncation_grows_to_full_operator() {
    let g = RootedTree::star(2).unwrap();
    let c = coll(vec![vt(-2, 3, &[0, 2, 4]), vt(-1, 20, &[2, 6, 10]), vt(0, 10, &[1, 5, 9]), vt(1, 7, &[0, 2, 4])]);
    let tiles: VertexTiles = HashMap::from([(g.root(), c)]);
    let fs = inputs(2, 2);
    let cfg = ModelConfig::default();
    let full = model_apply_with(&g, &tiles, &fs, &cfg).unwrap();
    let counts: Vec<usize> = (-3..=2).rev().map(|j| root_terms(&g, &tiles, Some(j))).collect();
    assert_eq!(counts, vec![0, 1, 2, 3, 4, 4]);
    let finest = model_apply_truncated(&g, &tiles, &fs, &cfg, Some(-2)).unwrap();
    assert!(max_err(&finest, full.samples()) == 0.0);
    let part = model_apply_truncated(&g, &tiles, &fs, &cfg, Some(0)).unwrap();
    assert!(max_err(&part, full.samples()) > 1e-6);
}

#[test]
fn arity_mismatch_rejected() {
    let g = RootedTree::star(2).unwrap();
    let tiles: VertexTiles = HashMap::from([(g.root(), coll(vec![vt(0, 10, &[1, 5])]))]);
    assert!(matches!(model_apply(&g, &tiles, &inputs(2, 1), 1), Err(Error::DimensionMismatch { .. })));
    assert!(model_apply(&g, &HashMap::new(), &inputs(2, 1), 1).is_err());
    assert!(model_apply(&g, &tiles, &inputs(3, 1), 1).is_err());
}

#[test]
fn lacunary_family_is_rank_one() {
    for levels in 1..=4 {
        let fam = lacunary_family(&LacunaryConfig { levels, ..LacunaryConfig::default() }).unwrap();
        let rep = rank1_check(&fam).unwrap();
        assert!(rep.ok && rep.sparse, "levels {levels}");
    }
    let fam = lacunary_family(&LacunaryConfig::default()).unwrap();
    let json = serde_json::to_string(&fam).unwrap();
    assert_eq!(TileCollection::from_json(&json).unwrap(), fam);
    let host = HostGrid::for_tiles(&fam.tiles).unwrap();
    for t in &fam.tiles {
        for i in 0..t.dim() {
            make_wave_packet(&t.component(i), DEFAULT_PACKET_ORDER, &host).unwrap();
        }
    }
}

#[test]
fn rank_one_conditions_two_and_three_detected() {
    // nested time, overlapping first components, second components far apart
    let c = coll(vec![vt(0, 0, &[0, 4]), vt(-1, 0, &[0, 300])]);
    let rep = rank1_check(&c).unwrap();
    assert!(rep.violations.iter().any(|v| v.condition == 2 && v.lower == 1 && v.upper == 0));
    // 3ω containment in every component although |I'| < |I|/C
    let c = coll(vec![vt(0, 0, &[0, 4]), vt(-6, 0, &[0, 4 * 64])]);
    let rep = rank1_check(&c).unwrap();
    assert!(rep.violations.iter().any(|v| v.condition == 3), "{:?}", rep.violations);
}

#[test]
fn constructed_tiles_have_area_one() {
    for levels in 1..=4 {
        for dim in 2..=4 {
            let fam = lacunary_family(&LacunaryConfig { levels, dim, ..LacunaryConfig::default() }).unwrap();
            for p in &fam.tiles {
                for i in 0..p.dim() {
                    let t = p.component(i);
                    let (a, b) = t.time.endpoints();
                    assert_eq!((b - a) * t.freq.length(), simplex_lab::dyadic::rat_int(1));
                }
            }
        }
    }
    let bad = Tile::new(DyadicInterval::new(2, 0), ShiftedDyadicInterval::new(-1, 0, 0).unwrap());
    assert!(matches!(bad, Err(Error::Geometry(_))));
}
