//! Slow reference computations, written without the fast paths they check.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;

use crate::grid::{dft, GridFunction, Spectrum, C64};
use crate::tiles::{Tile, TileCollection, VectorTile};

/// Direct `O(N^n)` sum over strictly increasing frequency tuples.
pub fn brute_force_simplex(a: &[f64], fs: &[GridFunction]) -> Vec<C64> {
    fn rec(j: usize, start: usize, tuple: &mut [usize], ks: &[i64], spectra: &[Spectrum], a: &[f64], out: &mut [C64]) {
        if j == tuple.len() {
            let coef: C64 = tuple.iter().enumerate().map(|(i, &t)| spectra[i].coeff(ks[t])).product();
            let freq: f64 = tuple.iter().enumerate().map(|(i, &t)| a[i] * ks[t] as f64).sum();
            let n = out.len() as f64;
            for (m, o) in out.iter_mut().enumerate() {
                *o += coef * C64::from_polar(1.0, 2.0 * PI * freq * m as f64 / n);
            }
            return;
        }
        for t in start..ks.len() {
            tuple[j] = t;
            rec(j + 1, t + 1, tuple, ks, spectra, a, out);
        }
    }
    let n = fs[0].n();
    let spectra: Vec<Spectrum> = fs.iter().map(dft).collect();
    let ks: Vec<i64> = spectra[0].freqs().collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    rec(0, 0, &mut vec![0; fs.len()], &ks, &spectra, a, &mut out);
    out
}

pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Every ordered tree on leaves `lo..=hi` with internal degrees `≥ 2`, as
/// parenthesized strings, built by splitting the leaf range into consecutive
/// blocks.
pub fn trees_by_blocks(lo: usize, hi: usize) -> BTreeSet<String> {
    fn splits(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo > hi {
            return vec![vec![]];
        }
        let mut out = vec![];
        for end in lo..=hi {
            for mut rest in splits(end + 1, hi) {
                rest.insert(0, (lo, end));
                out.push(rest);
            }
        }
        out
    }
    fn sub(lo: usize, hi: usize) -> Vec<String> {
        if lo == hi {
            return vec![lo.to_string()];
        }
        let mut out = vec![];
        for blocks in splits(lo, hi).into_iter().filter(|b| b.len() >= 2) {
            let mut acc = vec![String::new()];
            for (a, b) in blocks {
                let parts = sub(a, b);
                acc = acc
                    .iter()
                    .flat_map(|p| parts.iter().map(move |q| if p.is_empty() { q.clone() } else { format!("{p} {q}") }))
                    .collect();
            }
            out.extend(acc.into_iter().map(|s| format!("({s})")));
        }
        out
    }
    sub(lo, hi).into_iter().collect()
}

/// Adaptive Simpson on a complex integrand.
pub fn simpson(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> C64, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> C64 {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).norm() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

/// `∫_{a<z<y<x} g(z) h(y)`: Gauss rule in `y`, adaptive Simpson in `z`.
pub fn simplex2(g: &dyn Fn(f64) -> C64, h: &dyn Fn(f64) -> C64, a: f64, x: f64) -> C64 {
    let q = GaussLegendre::new(60.try_into().expect("nonzero degree"));
    let cells = 40;
    let w = (x - a) / cells as f64;
    let mut total = C64::new(0.0, 0.0);
    for c in 0..cells {
        let (ya, yb) = (a + c as f64 * w, a + (c + 1) as f64 * w);
        for &(t, wt) in q.as_node_weight_pairs() {
            let y = 0.5 * (ya + yb) + 0.5 * (yb - ya) * t;
            total += 0.5 * (yb - ya) * wt * h(y) * simpson(g, a, y, 1e-14);
        }
    }
    total
}

/// Samples of the wave packet on `tile` by direct summation of its Fourier
/// series, with the profile norm by midpoint quadrature.
pub fn packet(t: &Tile, s: u32, shift: f64, n: usize, period: f64) -> Vec<C64> {
    let (a, b) = t.freq.endpoints_f64();
    let (mid, r) = (0.5 * (a + b), 0.45 * (b - a));
    let q = 20000;
    let quad: f64 = (0..q)
        .map(|i| (1.0 - (-1.0 + 2.0 * (i as f64 + 0.5) / q as f64).powi(2)).powi(2 * s as i32))
        .sum::<f64>()
        * 2.0
        / q as f64;
    let norm = (r * quad).sqrt();
    let c = t.time.center() + shift * t.time.length();
    let ks: Vec<i64> = (((mid - r) * period).floor() as i64..=((mid + r) * period).ceil() as i64).collect();
    (0..n)
        .map(|m| {
            let x = m as f64 * period / n as f64;
            ks.iter()
                .map(|&k| {
                    let xi = k as f64 / period;
                    let u = (xi - mid) / r;
                    if u.abs() >= 1.0 {
                        return C64::new(0.0, 0.0);
                    }
                    C64::from_polar((1.0 - u * u).powi(s as i32) / (norm * period), 2.0 * PI * xi * (x - c))
                })
                .sum()
        })
        .collect()
}

pub fn inner(f: &[C64], g: &[C64], period: f64) -> C64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<C64>() * (period / f.len() as f64)
}

/// `Σ_P |I_P|^{-(k-1)/2} Π_i ⟨g_i, Φ_{P_i}⟩ Φ_{P_k}`, averaged over `alpha`
/// shifts, with the inputs `g_i` supplied per tile.
pub fn vertex_sum(
    c: &TileCollection,
    inputs: impl Fn(&VectorTile) -> Vec<Vec<C64>>,
    alpha: usize,
    s: u32,
    n: usize,
    period: f64,
) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for a in 0..alpha {
        let shift = a as f64 / alpha as f64;
        for p in &c.tiles {
            let gs = inputs(p);
            let k = gs.len();
            let mut coef = C64::new(p.time.length().powf(-(k as f64 - 1.0) / 2.0), 0.0);
            for (i, g) in gs.iter().enumerate() {
                coef *= inner(g, &packet(&p.component(i), s, shift, n, period), period);
            }
            for (o, v) in out.iter_mut().zip(packet(&p.component(k), s, shift, n, period)) {
                *o += coef * v / alpha as f64;
            }
        }
    }
    out
}

/// Sup-norm error relative to `max(‖b‖_∞, 1)`.
pub fn max_err(a: &[C64], b: &[C64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(1.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}
