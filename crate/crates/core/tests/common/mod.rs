#![allow(dead_code)]

use num_complex::Complex64 as C64;
use simplex_lab::grid::{dft, GridFunction, Preset};

/// Direct `O(N^n)` sum over strictly increasing frequency tuples.
pub fn brute_force_simplex(a: &[f64], fs: &[GridFunction]) -> Vec<C64> {
    let n = fs[0].n();
    let spectra: Vec<_> = fs.iter().map(dft).collect();
    let ks: Vec<i64> = spectra[0].freqs().collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let mut tuple = vec![0usize; fs.len()];
    fn rec(
        j: usize,
        start: usize,
        tuple: &mut Vec<usize>,
        ks: &[i64],
        spectra: &[simplex_lab::grid::Spectrum],
        a: &[f64],
        out: &mut [C64],
    ) {
        if j == tuple.len() {
            let coef: C64 = tuple.iter().enumerate().map(|(i, &t)| spectra[i].coeff(ks[t])).product();
            let freq: f64 = tuple.iter().enumerate().map(|(i, &t)| a[i] * ks[t] as f64).sum();
            let n = out.len() as f64;
            for (m, o) in out.iter_mut().enumerate() {
                *o += coef * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * freq * m as f64 / n);
            }
            return;
        }
        for t in start..ks.len() {
            tuple[j] = t;
            rec(j + 1, t + 1, tuple, ks, spectra, a, out);
        }
    }
    rec(0, 0, &mut tuple, &ks, &spectra, a, &mut out);
    out
}

pub fn rel_l2(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

pub fn random(band: usize, seed: u64, n: usize, period: f64) -> GridFunction {
    GridFunction::from_preset(&Preset::RandomBandlimited { band, seed }, n, period).unwrap()
}

pub fn full_random(seed: u64, n: usize) -> GridFunction {
    random(n / 2 - 1, seed, n, 1.0)
}
