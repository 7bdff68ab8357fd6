//! Polynomial smoothstep profiles and plateau bumps built from them.

use serde::{Deserialize, Serialize};

use crate::dyadic::{rat_to_f64, ShiftedDyadicInterval};
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: u32 = 6;

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `h_s(t) = t^{s+1} Σ_{i≤s} C(s+i, i)(1-t)^i` on `[0,1]`, clamped outside.
/// It is `C^s` with `h_s(t) + h_s(1-t) = 1`.
pub fn smoothstep(order: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    if t > 0.5 {
        return 1.0 - smoothstep(order, 1.0 - t);
    }
    let s = order as u64;
    let u = 1.0 - t;
    let mut acc = 0.0;
    let mut upow = 1.0;
    for i in 0..=s {
        acc += binom(s + i, i) * upow;
        upow *= u;
    }
    acc * t.powi(order as i32 + 1)
}

/// Monomial coefficients of the smoothstep polynomial on `[0,1]`.
pub fn smoothstep_coefficients(order: u32) -> Vec<f64> {
    let s = order as usize;
    let mut poly = vec![0.0; 2 * s + 2];
    for i in 0..=s {
        let c = binom((s + i) as u64, i as u64);
        // t^{s+1} (1-t)^i
        for j in 0..=i {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            poly[s + 1 + j] += c * sign * binom(i as u64, j as u64);
        }
    }
    poly
}

/// `l`-th derivative of the smoothstep.
pub fn smoothstep_derivative(order: u32, l: u32, t: f64) -> f64 {
    if l == 0 {
        return smoothstep(order, t);
    }
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    if t > 0.5 {
        let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
        return sign * smoothstep_derivative(order, l, 1.0 - t);
    }
    let poly = smoothstep_coefficients(order);
    let mut acc = 0.0;
    for (p, &c) in poly.iter().enumerate().rev() {
        if p < l as usize {
            break;
        }
        let falling: f64 = (0..l as usize).map(|i| (p - i) as f64).product();
        acc += c * falling * t.powi((p - l as usize) as i32);
    }
    acc
}

/// Plateau bump `h((y - r0)/rw) - h((y - f0)/fw)` with `r0 + rw ≤ f0`:
/// rises on `[r0, r0 + rw]`, equals one up to `f0`, falls on `[f0, f0 + fw]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump1D {
    pub rise_start: f64,
    pub rise_width: f64,
    pub fall_start: f64,
    pub fall_width: f64,
    pub order: u32,
}

impl Bump1D {
    pub fn new(rise_start: f64, rise_width: f64, fall_start: f64, fall_width: f64, order: u32) -> Result<Self> {
        if !(rise_width > 0.0 && fall_width > 0.0) {
            return Err(Error::Domain("transition widths must be positive".into()));
        }
        if rise_start + rise_width > fall_start {
            return Err(Error::Domain("rise must finish before the fall starts".into()));
        }
        Ok(Self { rise_start, rise_width, fall_start, fall_width, order })
    }

    /// Bump supported in `support·I`, identically one on `plateau·I`
    /// (a single point at the center when `plateau` is `None`).
    pub fn adapted(
        interval: &ShiftedDyadicInterval,
        support: f64,
        plateau: Option<f64>,
        order: u32,
    ) -> Result<Self> {
        let (a, b) = interval.endpoints();
        let (a, b) = (rat_to_f64(&a), rat_to_f64(&b));
        Self::on_interval(a, b, support, plateau, order)
    }

    pub fn on_interval(a: f64, b: f64, support: f64, plateau: Option<f64>, order: u32) -> Result<Self> {
        let p = plateau.unwrap_or(0.0);
        if !(support > 0.0 && support <= 1.0 && p >= 0.0 && p < support) {
            return Err(Error::Domain(format!(
                "need 0 <= plateau < support <= 1, got {p} and {support}"
            )));
        }
        let c = 0.5 * (a + b);
        let len = b - a;
        let outer = 0.5 * support * len;
        let inner = 0.5 * p * len;
        let w = outer - inner;
        Self::new(c - outer, w, c + inner, w, order)
    }

    pub fn eval(&self, y: f64) -> f64 {
        smoothstep(self.order, (y - self.rise_start) / self.rise_width)
            - smoothstep(self.order, (y - self.fall_start) / self.fall_width)
    }

    pub fn derivative(&self, l: u32, y: f64) -> f64 {
        smoothstep_derivative(self.order, l, (y - self.rise_start) / self.rise_width)
            / self.rise_width.powi(l as i32)
            - smoothstep_derivative(self.order, l, (y - self.fall_start) / self.fall_width)
                / self.fall_width.powi(l as i32)
    }

    /// Closed support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        (self.rise_start, self.fall_start + self.fall_width)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.rise_start + self.rise_width, self.fall_start)
    }

    pub fn is_zero_at(&self, y: f64) -> bool {
        let (lo, hi) = self.support();
        y <= lo || y >= hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_symmetry_and_endpoints() {
        for s in [1, 3, 6] {
            assert_eq!(smoothstep(s, 0.0), 0.0);
            assert_eq!(smoothstep(s, 1.0), 1.0);
            for i in 1..20 {
                let t = i as f64 / 20.0;
                assert!((smoothstep(s, t) + smoothstep(s, 1.0 - t) - 1.0).abs() < 1e-14);
            }
        }
        assert!((smoothstep(1, 0.25) - (3.0 * 0.0625 - 2.0 * 0.015625)).abs() < 1e-15);
    }

    #[test]
    fn derivatives_vanish_at_ends_up_to_order() {
        let s = 6;
        for l in 1..=s {
            assert!(smoothstep_derivative(s, l, 1e-12).abs() < 1e-4);
            assert!(smoothstep_derivative(s, l, 1.0 - 1e-12).abs() < 1e-4);
        }
        // first derivative against a central difference
        let h = 1e-6;
        for t in [0.1, 0.4, 0.8] {
            let fd = (smoothstep(s, t + h) - smoothstep(s, t - h)) / (2.0 * h);
            assert!((fd - smoothstep_derivative(s, 1, t)).abs() < 1e-6);
        }
    }

    #[test]
    fn adapted_bump_support_and_plateau() {
        let i = ShiftedDyadicInterval::new(0, 0, 0).unwrap();
        let b = Bump1D::adapted(&i, 0.9, Some(0.5), 6).unwrap();
        let close = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs() < 1e-15 && (x.1 - y.1).abs() < 1e-15;
        assert!(close(b.support(), (0.05, 0.95)));
        assert!(close(b.plateau(), (0.25, 0.75)));
        assert_eq!(b.eval(0.04), 0.0);
        assert_eq!(b.eval(0.5), 1.0);
        for k in 0..=100 {
            let v = b.eval(k as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(Bump1D::adapted(&i, 0.5, Some(0.6), 6).is_err());
    }
}
