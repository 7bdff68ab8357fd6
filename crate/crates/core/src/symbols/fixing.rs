//! Separation of a bump on `x₁ + … + x_d` from a product of cube bumps.
//!
//! With `Φ_{Q_j}` adapted to `αQ_j` and a cutoff `ψ_j` equal to one on `αQ_j`
//! and supported in `βQ_j`, the function `g(x) = Φ_I(Σ x_j) Π ψ_j(x_j)` is
//! smooth and compactly supported inside the box `Q`, so it is a multiple
//! Fourier series there and
//! `Π Φ_{Q_j}(x_j) Φ_I(Σ x_j) = Σ_n C_n Π Φ_{Q_j}(x_j) e^{2πi n_j (x_j - q_j)/|Q_j|}`.

use serde::Serialize;

use super::bump::Bump1D;
use crate::error::{Error, Result};
use crate::grid::{fft_in_place, C64};

pub const DEFAULT_BETA: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixingTerm {
    pub n: Vec<i32>,
    pub coeff: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixingExpansion {
    pub cube: Vec<(f64, f64)>,
    pub bumps: Vec<Bump1D>,
    pub outer: Bump1D,
    pub cutoffs: Vec<Bump1D>,
    pub alpha: f64,
    pub beta: f64,
    pub trunc: u32,
    /// FFT resolution per axis; 0 when the outer bump is trivial.
    pub resolution: usize,
    pub terms: Vec<FixingTerm>,
}

impl FixingExpansion {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().sum();
        self.bumps.iter().zip(x).map(|(b, &xj)| b.eval(xj)).product::<f64>() * self.outer.eval(s)
    }

    pub fn rhs(&self, x: &[f64]) -> C64 {
        let prod: f64 = self.bumps.iter().zip(x).map(|(b, &xj)| b.eval(xj)).product();
        if prod == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let phases: Vec<f64> = self
            .cube
            .iter()
            .zip(x)
            .map(|(&(a, b), &xj)| 2.0 * std::f64::consts::PI * (xj - a) / (b - a))
            .collect();
        let sum: C64 = self
            .terms
            .iter()
            .map(|t| {
                let th: f64 = t.n.iter().zip(&phases).map(|(&n, &p)| n as f64 * p).sum();
                t.coeff * C64::from_polar(1.0, th)
            })
            .sum();
        sum * prod
    }

    pub fn residual_at(&self, x: &[f64]) -> f64 {
        (self.rhs(x) - self.lhs(x)).norm()
    }

    /// Largest residual over a `points^d` grid of the cube.
    pub fn max_residual(&self, points: usize) -> f64 {
        let d = self.cube.len();
        let mut idx = vec![0usize; d];
        let mut worst: f64 = 0.0;
        loop {
            let x: Vec<f64> = idx
                .iter()
                .zip(&self.cube)
                .map(|(&i, &(a, b))| a + (b - a) * (i as f64 + 0.5) / points as f64)
                .collect();
            worst = worst.max(self.residual_at(&x));
            let mut ax = 0;
            loop {
                if ax == d {
                    return worst;
                }
                idx[ax] += 1;
                if idx[ax] < points {
                    break;
                }
                idx[ax] = 0;
                ax += 1;
            }
        }
    }

    /// `max |C_n|` over `‖n‖_∞ = r`.
    pub fn shell_max(&self, r: i32) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.n.iter().map(|n| n.abs()).max() == Some(r))
            .map(|t| t.coeff.norm())
            .fold(0.0, f64::max)
    }
}

fn bump_fraction(b: &Bump1D, (a, c): (f64, f64)) -> f64 {
    let mid = 0.5 * (a + c);
    let (lo, hi) = b.support();
    2.0 * (mid - lo).max(hi - mid) / (c - a)
}

fn resolution_for(d: usize) -> Result<usize> {
    match d {
        1 => Ok(512),
        2 => Ok(128),
        3 => Ok(64),
        _ => Err(Error::NumericGuard("fixing expansion limited to d <= 3".into())),
    }
}

pub fn fixing_expand(cube: &[(f64, f64)], bumps: &[Bump1D], outer: &Bump1D, trunc: i64) -> Result<FixingExpansion> {
    fixing_expand_with(cube, bumps, outer, trunc, DEFAULT_BETA)
}

pub fn fixing_expand_with(
    cube: &[(f64, f64)],
    bumps: &[Bump1D],
    outer: &Bump1D,
    trunc: i64,
    beta: f64,
) -> Result<FixingExpansion> {
    let trunc = u32::try_from(trunc).map_err(|_| Error::Domain("truncation order must be >= 0".into()))?;
    let d = cube.len();
    if d == 0 || bumps.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: bumps.len() });
    }
    if cube.iter().any(|&(a, b)| !(b > a)) {
        return Err(Error::Domain("cube sides must be nondegenerate".into()));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    let alpha = bumps.iter().zip(cube).map(|(b, &q)| bump_fraction(b, q)).fold(0.0, f64::max);
    if alpha >= beta {
        return Err(Error::Precondition(format!("bumps adapted to {alpha}·Q, need a fraction below {beta}")));
    }
    let cutoffs: Vec<Bump1D> = cube
        .iter()
        .zip(bumps)
        .map(|(&(a, b), f)| Bump1D::on_interval(a, b, beta, Some(alpha), f.order))
        .collect::<Result<_>>()?;
    let (slo, shi) = bumps.iter().fold((0.0, 0.0), |(l, h), b| (l + b.support().0, h + b.support().1));
    let (plo, phi) = outer.plateau();
    let mut exp = FixingExpansion {
        cube: cube.to_vec(),
        bumps: bumps.to_vec(),
        outer: *outer,
        cutoffs,
        alpha,
        beta,
        trunc,
        resolution: 0,
        terms: vec![],
    };
    if plo <= slo && shi <= phi {
        exp.terms.push(FixingTerm { n: vec![0; d], coeff: C64::new(1.0, 0.0) });
        return Ok(exp);
    }
    let m = resolution_for(d)?;
    if 2 * trunc as usize >= m {
        return Err(Error::Aliasing { band: trunc as usize, half: m / 2 });
    }
    exp.resolution = m;
    let total = m.pow(d as u32);
    let mut data = vec![C64::new(0.0, 0.0); total];
    for (flat, slot) in data.iter_mut().enumerate() {
        let mut rest = flat;
        let mut s = 0.0;
        let mut w = 1.0;
        for (j, &(a, b)) in cube.iter().enumerate() {
            let i = rest % m;
            rest /= m;
            let x = a + (b - a) * i as f64 / m as f64;
            s += x;
            w *= exp.cutoffs[j].eval(x);
        }
        *slot = C64::new(w * outer.eval(s), 0.0);
    }
    // separable transform, axis j has stride m^j
    let mut line = vec![C64::new(0.0, 0.0); m];
    for j in 0..d {
        let stride = m.pow(j as u32);
        for base in 0..total {
            if (base / stride) % m != 0 {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[base + i * stride];
            }
            fft_in_place(&mut line);
            for (i, v) in line.iter().enumerate() {
                data[base + i * stride] = *v;
            }
        }
    }
    let t = trunc as i32;
    let norm = total as f64;
    let mut n = vec![-t; d];
    loop {
        let flat = n.iter().rev().fold(0usize, |acc, &nj| acc * m + nj.rem_euclid(m as i32) as usize);
        exp.terms.push(FixingTerm { n: n.clone(), coeff: data[flat] / norm });
        let mut ax = 0;
        loop {
            if ax == d {
                return Ok(exp);
            }
            n[ax] += 1;
            if n[ax] <= t {
                break;
            }
            n[ax] = -t;
            ax += 1;
        }
    }
}
