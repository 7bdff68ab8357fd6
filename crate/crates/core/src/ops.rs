//! Frequency-side simplex operators, maximal variants and kernel cross-checks.
//!
//! On a grid with Fourier coefficients `c_j(k)` the simplex operator is
//! `T(x_m) = Σ_{k₁<…<k_n} Π c_j(k_j) e^{2πi (Σ a_j k_j) x_m / L}` with
//! `a_j = α_j s_j`. It is evaluated by the prefix recursion
//! `U_j(x, K) = Σ_{k<K} c_j(k) e^{2πi a_j k x/L} U_{j-1}(x, k)`, one sweep over the
//! active frequencies per sample point.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dft, fft_in_place, ifft_in_place, lp_quasinorm, signed_freq, GridFunction, Spectrum, C64};
use crate::symbols::Bump1D;

pub const MAX_GRID_SMALL_ARITY: usize = 1 << 14;
pub const MAX_GRID_LARGE_ARITY: usize = 1 << 11;
/// Spectral coefficients below this fraction of the largest are skipped.
pub const ACTIVE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexOpSpec {
    pub n: usize,
    pub signs: Vec<i8>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub maximal: bool,
}

impl SimplexOpSpec {
    /// `T_n`: all signs `+1`.
    pub fn plain(n: usize) -> Self {
        Self { n, signs: vec![1; n], alpha: None, maximal: false }
    }

    /// `T̃_n`: alternating signs `+, -, +, …`.
    pub fn alternating(n: usize) -> Self {
        Self { n, signs: (0..n).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect(), alpha: None, maximal: false }
    }

    pub fn with_alpha(n: usize, alpha: Vec<f64>) -> Self {
        Self { n, signs: vec![1; n], alpha: Some(alpha), maximal: false }
    }

    pub fn maximal(mut self) -> Self {
        self.maximal = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("arity must be positive".into()));
        }
        if self.signs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.signs.len() });
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("signs must be +1 or -1".into()));
        }
        if let Some(a) = &self.alpha {
            if a.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, got: a.len() });
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("alpha must be finite".into()));
            }
        }
        Ok(())
    }

    /// Effective phase coefficients `a_j = α_j s_j`.
    pub fn coefficients(&self) -> Vec<f64> {
        let alpha = self.alpha.clone().unwrap_or_else(|| vec![1.0; self.n]);
        alpha.iter().zip(&self.signs).map(|(a, &s)| a * s as f64).collect()
    }

    /// Consecutive runs `(j₁, j₂)` (0-based, inclusive, length ≥ 2) whose
    /// coefficient sum vanishes.
    pub fn degenerate_runs(&self) -> Vec<(usize, usize)> {
        let a = self.coefficients();
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        let mut out = vec![];
        for i in 0..a.len() {
            let mut s = a[i];
            for j in i + 1..a.len() {
                s += a[j];
                if s.abs() <= 1e-12 * scale {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.degenerate_runs().is_empty()
    }
}

fn check_inputs(n: usize, fs: &[GridFunction]) -> Result<()> {
    if fs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: fs.len() });
    }
    for f in &fs[1..] {
        fs[0].check_compatible(f)?;
    }
    let limit = if n <= 4 { MAX_GRID_SMALL_ARITY } else { MAX_GRID_LARGE_ARITY };
    if fs[0].n() > limit {
        return Err(Error::NumericGuard(format!("grid size {} exceeds {limit} for arity {n}", fs[0].n())));
    }
    Ok(())
}

/// Phase factor `e^{2πi a k m / N}`, exact table lookup for integer `a`.
struct Phases {
    n: usize,
    table: Vec<C64>,
}

impl Phases {
    fn new(n: usize) -> Self {
        let table = (0..n).map(|i| C64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64)).collect();
        Self { n, table }
    }

    fn get(&self, a: f64, k: i64, m: usize) -> C64 {
        if a.fract() == 0.0 && a.abs() < 1e9 {
            let idx = ((a as i64) * k).rem_euclid(self.n as i64) as i128 * m as i128;
            self.table[(idx.rem_euclid(self.n as i128)) as usize]
        } else {
            let t = a * k as f64 * m as f64 / self.n as f64;
            C64::from_polar(1.0, 2.0 * PI * t.rem_euclid(1.0))
        }
    }
}

struct Sweep {
    freqs: Vec<i64>,
    coeffs: Vec<Vec<C64>>,
    a: Vec<f64>,
    phases: Phases,
}

impl Sweep {
    fn new(spec: &SimplexOpSpec, fs: &[GridFunction]) -> Self {
        let spectra: Vec<Spectrum> = fs.iter().map(dft).collect();
        let cmax = spectra.iter().flat_map(|s| s.coefficients()).map(|c| c.norm()).fold(0.0, f64::max);
        let freqs: Vec<i64> = spectra[0]
            .freqs()
            .filter(|&k| spectra.iter().any(|s| s.coeff(k).norm() > ACTIVE_TOL * cmax))
            .collect();
        let coeffs = spectra
            .iter()
            .map(|s| {
                let own = s.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
                freqs
                    .iter()
                    .map(|&k| {
                        let c = s.coeff(k);
                        if c.norm() > ACTIVE_TOL * own {
                            c
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { freqs, coeffs, a: spec.coefficients(), phases: Phases::new(fs[0].n()) }
    }

    /// `(U_n(x_m, ∞), sup_K |U_n(x_m, K)|)`.
    fn at(&self, m: usize, buf: &mut Vec<C64>) -> (C64, f64) {
        buf.clear();
        buf.resize(self.freqs.len(), C64::new(1.0, 0.0));
        let n = self.coeffs.len();
        let mut total = C64::new(0.0, 0.0);
        let mut sup: f64 = 0.0;
        for j in 0..n {
            let mut run = C64::new(0.0, 0.0);
            let last = j + 1 == n;
            for (i, &k) in self.freqs.iter().enumerate() {
                let prev = buf[i];
                buf[i] = run;
                let c = self.coeffs[j][i];
                if c != C64::new(0.0, 0.0) && prev != C64::new(0.0, 0.0) {
                    run += c * self.phases.get(self.a[j], k, m) * prev;
                    if last {
                        sup = sup.max(run.norm());
                    }
                }
            }
            total = run;
        }
        (total, sup)
    }
}

fn parallel_map(len: usize, f: impl Fn(usize, &mut Vec<C64>) -> C64 + Sync) -> Vec<C64> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(len.max(1));
    let chunk = len.div_ceil(threads);
    let mut out = vec![C64::new(0.0, 0.0); len];
    std::thread::scope(|s| {
        for (ci, slot) in out.chunks_mut(chunk.max(1)).enumerate() {
            let f = &f;
            s.spawn(move || {
                let mut buf = vec![];
                for (i, v) in slot.iter_mut().enumerate() {
                    *v = f(ci * chunk + i, &mut buf);
                }
            });
        }
    });
    out
}

/// Discrete simplex operator; returns the maximal operator when `spec.maximal`.
pub fn simplex_apply(spec: &SimplexOpSpec, fs: &[GridFunction]) -> Result<GridFunction> {
    spec.validate()?;
    check_inputs(spec.n, fs)?;
    let sweep = Sweep::new(spec, fs);
    let maximal = spec.maximal;
    let out = parallel_map(fs[0].n(), |m, buf| {
        let (t, sup) = sweep.at(m, buf);
        if maximal {
            C64::new(sup, 0.0)
        } else {
            t
        }
    });
    GridFunction::new(out, fs[0].period())
}

/// `x ↦ max_K |Σ_{k₁<…<k_n<K} …|`, real and nonnegative.
pub fn maximal_apply(spec: &SimplexOpSpec, fs: &[GridFunction]) -> Result<GridFunction> {
    simplex_apply(&spec.clone().maximal(), fs)
}

pub fn full_product_reference(fs: &[GridFunction]) -> Result<GridFunction> {
    let first = fs.first().ok_or_else(|| Error::Domain("need at least one function".into()))?;
    fs[1..].iter().try_fold(first.clone(), |acc, f| acc.zip_with(f, |a, b| a * b))
}

/// Largest `|k|` with a coefficient above `tol·max|c|`.
pub fn effective_band(f: &GridFunction, tol: f64) -> i64 {
    let s = dft(f);
    let cmax = s.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
    s.freqs().filter(|&k| s.coeff(k).norm() > tol * cmax).map(|k| k.abs()).max().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelOutput {
    pub output: GridFunction,
    /// False when some input has energy above `N/4`.
    pub band_limited: bool,
}

fn band_ok(fs: &[&GridFunction]) -> bool {
    fs.iter().all(|f| effective_band(f, 1e-12) <= (f.n() / 4) as i64)
}

/// `Δt·K(t_r)` at `t_r = rL/N`, where `K(t) = (π/L)cot(πt/L)` is the
/// periodization of `1/t`.
fn kernel_weights(n: usize) -> Vec<f64> {
    (0..n).map(|r| if r == 0 { 0.0 } else { PI / n as f64 / (PI * r as f64 / n as f64).tan() }).collect()
}

/// `Σ_{r≠0} f₁(x - t_r) f₂(x + t_r) Δt K(t_r)`, pairing `±t_r`.
pub fn bht_kernel(f1: &GridFunction, f2: &GridFunction) -> Result<KernelOutput> {
    f1.check_compatible(f2)?;
    let n = f1.n();
    let (a, b) = (f1.samples(), f2.samples());
    let w = kernel_weights(n);
    let out = parallel_map(n, |m, _| {
        let mut acc = C64::new(0.0, 0.0);
        for r in 1..n / 2 {
            let p = (m + r) % n;
            let q = (m + n - r) % n;
            acc += (a[q] * b[p] - a[p] * b[q]) * w[r];
        }
        acc
    });
    Ok(KernelOutput { output: GridFunction::new(out, f1.period())?, band_limited: band_ok(&[f1, f2]) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T3Variant {
    Plus,
    Minus,
}

/// Discrete bi-parameter p.v. sum for `f₁(x-t₁) f₂(x±(t₁+t₂)) f₃(x-t₂) K(t₁)K(t₂)`.
pub fn t3_kernel(f1: &GridFunction, f2: &GridFunction, f3: &GridFunction, variant: T3Variant) -> Result<KernelOutput> {
    f1.check_compatible(f2)?;
    f1.check_compatible(f3)?;
    let n = f1.n();
    if n > 1024 {
        return Err(Error::NumericGuard("t3_kernel is O(N^3); limited to N <= 1024".into()));
    }
    let (a, b, c) = (f1.samples(), f2.samples(), f3.samples());
    let sign: i64 = match variant {
        T3Variant::Plus => 1,
        T3Variant::Minus => -1,
    };
    let h = (n / 2) as i64;
    let w = kernel_weights(n);
    let idx = |m: usize, s: i64| (m as i64 + s).rem_euclid(n as i64) as usize;
    let out = parallel_map(n, |m, _| {
        let mut acc = C64::new(0.0, 0.0);
        for r1 in 1..h {
            for r2 in 1..h {
                let mut term = C64::new(0.0, 0.0);
                for (s1, s2) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let (t1, t2) = (s1 * r1, s2 * r2);
                    let v = a[idx(m, -t1)] * b[idx(m, sign * (t1 + t2))] * c[idx(m, -t2)];
                    term += v * (s1 * s2) as f64;
                }
                acc += term * (w[r1 as usize] * w[r2 as usize]);
            }
        }
        acc
    });
    Ok(KernelOutput { output: GridFunction::new(out, f1.period())?, band_limited: band_ok(&[f1, f2, f3]) })
}

/// Coefficients above `ACTIVE_TOL·max|c|`, by increasing frequency.
fn active(s: &Spectrum) -> Vec<(i64, C64)> {
    let cmax = s.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
    s.freqs().map(|k| (k, s.coeff(k))).filter(|(_, c)| c.norm() > ACTIVE_TOL * cmax).collect()
}

/// Frequency side of [`bht_kernel`]: symbol `-iπ·sgn(ξ₁ - ξ₂)`.
pub fn bht_symbol_apply(f1: &GridFunction, f2: &GridFunction) -> Result<GridFunction> {
    f1.check_compatible(f2)?;
    let (a1, a2) = (active(&dft(f1)), active(&dft(f2)));
    let phases = Phases::new(f1.n());
    let out = parallel_map(f1.n(), |m, _| {
        let w1: Vec<C64> = a1.iter().map(|&(k, c)| c * phases.get(1.0, k, m)).collect();
        let total: C64 = w1.iter().sum();
        // below = Σ_{k₁<k₂}, equal = Σ_{k₁=k₂}
        let mut acc = C64::new(0.0, 0.0);
        let mut i = 0;
        let mut below = C64::new(0.0, 0.0);
        for &(k2, c2) in &a2 {
            while i < a1.len() && a1[i].0 < k2 {
                below += w1[i];
                i += 1;
            }
            let equal = if i < a1.len() && a1[i].0 == k2 { w1[i] } else { C64::new(0.0, 0.0) };
            let above = total - below - equal;
            acc += c2 * phases.get(1.0, k2, m) * (above - below);
        }
        acc * C64::new(0.0, -PI)
    });
    GridFunction::new(out, f1.period())
}

/// Frequency side of [`t3_kernel`]: `(iπ)² sgn(ξ₂-ξ₁) sgn(ξ₂-ξ₃)` for
/// `Plus`, `(-iπ)² sgn(ξ₁+ξ₂) sgn(ξ₂+ξ₃)` for `Minus`.
pub fn t3_symbol_apply(f1: &GridFunction, f2: &GridFunction, f3: &GridFunction, variant: T3Variant) -> Result<GridFunction> {
    f1.check_compatible(f2)?;
    f1.check_compatible(f3)?;
    let sp = [dft(f1), dft(f2), dft(f3)];
    let n = f1.n();
    let half = (n / 2) as i64;
    let act: Vec<Vec<(i64, C64)>> = sp.iter().map(active).collect();
    let phases = Phases::new(n);
    // prefix[i] = Σ_{k < i - N/2} c(k) e(k x)
    let prefix = |a: &[(i64, C64)], m: usize| {
        let mut dense = vec![C64::new(0.0, 0.0); n + 1];
        for &(k, c) in a {
            dense[(k + half) as usize + 1] += c * phases.get(1.0, k, m);
        }
        for i in 1..=n {
            let prev = dense[i - 1];
            dense[i] += prev;
        }
        dense
    };
    // Σ_k sgn(k - c) w(k)
    let signed = |pre: &[C64], c: i64| {
        let at = |t: i64| pre[(t + half).clamp(0, n as i64) as usize];
        (pre[n] - at(c + 1)) - at(c)
    };
    let out = parallel_map(n, |m, _| {
        let (p1, p3) = (prefix(&act[0], m), prefix(&act[2], m));
        let mut acc = C64::new(0.0, 0.0);
        for &(k2, c2) in &act[1] {
            let (left, right) = match variant {
                T3Variant::Plus => (-signed(&p1, k2), -signed(&p3, k2)),
                T3Variant::Minus => (signed(&p1, -k2), signed(&p3, -k2)),
            };
            acc += c2 * phases.get(1.0, k2, m) * left * right;
        }
        -PI * PI * acc
    });
    GridFunction::new(out, f1.period())
}

/// Frequency multiplier `ξ ↦ m(ξ)` with `ξ = k/L`.
#[derive(Clone)]
pub enum Multiplier {
    Bump(Bump1D),
    Fn(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Multiplier::Bump(b) => write!(f, "Bump({b:?})"),
            Multiplier::Fn(_) => write!(f, "Fn(..)"),
        }
    }
}

impl Multiplier {
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            Multiplier::Bump(b) => b.eval(xi),
            Multiplier::Fn(f) => f(xi),
        }
    }
}

/// Cascade of pointwise products and Fourier multipliers mirroring a tree.
#[derive(Debug, Clone)]
pub enum SeparablePlan {
    Input(usize),
    Product(Vec<SeparablePlan>),
    Multiply { child: Box<SeparablePlan>, multiplier: Multiplier },
}

impl SeparablePlan {
    fn inputs(&self, out: &mut Vec<usize>) -> Result<()> {
        match self {
            SeparablePlan::Input(j) => {
                out.push(*j);
                Ok(())
            }
            SeparablePlan::Product(ch) if ch.is_empty() => Err(Error::Construction("empty product node".into())),
            SeparablePlan::Product(ch) => ch.iter().try_for_each(|c| c.inputs(out)),
            SeparablePlan::Multiply { child, .. } => child.inputs(out),
        }
    }

    fn eval(&self, padded: &[Vec<C64>], period: f64) -> Vec<C64> {
        match self {
            SeparablePlan::Input(j) => padded[*j].clone(),
            SeparablePlan::Product(ch) => {
                let mut acc = ch[0].eval(padded, period);
                for c in &ch[1..] {
                    for (a, b) in acc.iter_mut().zip(c.eval(padded, period)) {
                        *a *= b;
                    }
                }
                acc
            }
            SeparablePlan::Multiply { child, multiplier } => {
                let mut v = child.eval(padded, period);
                let m = v.len();
                fft_in_place(&mut v);
                for (i, c) in v.iter_mut().enumerate() {
                    *c *= multiplier.eval(signed_freq(i, m) as f64 / period) / m as f64;
                }
                ifft_in_place(&mut v);
                v
            }
        }
    }
}

/// Evaluates a separable cascade without aliasing by working on a grid
/// oversampled by the number of inputs, then restricting to the original points.
pub fn separable_apply(plan: &SeparablePlan, fs: &[GridFunction]) -> Result<GridFunction> {
    let mut used = vec![];
    plan.inputs(&mut used)?;
    let mut sorted = used.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != used.len() || sorted != (0..fs.len()).collect::<Vec<_>>() {
        return Err(Error::Construction("plan must use every input exactly once".into()));
    }
    for f in &fs[1..] {
        fs[0].check_compatible(f)?;
    }
    let n = fs[0].n();
    let big = (n * fs.len().max(1)).next_power_of_two() * 2;
    let padded: Vec<Vec<C64>> = fs
        .iter()
        .map(|f| {
            let s = dft(f);
            let mut bins = vec![C64::new(0.0, 0.0); big];
            for k in s.freqs() {
                if k != -(n as i64) / 2 {
                    bins[k.rem_euclid(big as i64) as usize] = s.coeff(k);
                }
            }
            ifft_in_place(&mut bins);
            bins
        })
        .collect();
    let v = plan.eval(&padded, fs[0].period());
    let step = big / n;
    GridFunction::new((0..n).map(|m| v[m * step]).collect(), fs[0].period())
}

/// `‖T(f⃗)‖_{p_out} / Π‖f_j‖₂`.
pub fn hoelder_ratio(spec: &SimplexOpSpec, fs: &[GridFunction], p_out: f64) -> Result<f64> {
    let denom: f64 = fs.iter().map(|f| lp_quasinorm(f, 2.0)).collect::<Result<Vec<_>>>()?.iter().product();
    if denom == 0.0 {
        return Err(Error::Domain("zero input norm".into()));
    }
    let t = simplex_apply(spec, fs)?;
    Ok(lp_quasinorm(&t, p_out)? / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Preset;

    fn mode(k: i64, n: usize) -> GridFunction {
        GridFunction::from_preset(&Preset::PureMode { k }, n, 1.0).unwrap()
    }

    fn close(a: &GridFunction, b: &GridFunction, tol: f64) -> bool {
        a.samples().iter().zip(b.samples()).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn pure_mode_examples() {
        let t = simplex_apply(&SimplexOpSpec::plain(2), &[mode(3, 32), mode(7, 32)]).unwrap();
        assert!(close(&t, &mode(10, 32), 1e-12));
        let z = simplex_apply(&SimplexOpSpec::plain(2), &[mode(7, 32), mode(3, 32)]).unwrap();
        assert!(z.samples().iter().all(|c| c.norm() == 0.0));
        let r = hoelder_ratio(&SimplexOpSpec::plain(2), &[mode(3, 32), mode(7, 32)], 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let r = hoelder_ratio(&SimplexOpSpec::plain(2), &[mode(7, 32), mode(3, 32)], 1.0).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn carleson_of_mode_is_one() {
        let c = maximal_apply(&SimplexOpSpec::plain(1), &[mode(5, 64)]).unwrap();
        assert!(c.samples().iter().all(|v| (v.re - 1.0).abs() < 1e-12 && v.im == 0.0));
    }

    #[test]
    fn degeneracy_flags() {
        assert!(!SimplexOpSpec::with_alpha(2, vec![1.0, -1.0]).is_nondegenerate());
        assert!(SimplexOpSpec::with_alpha(2, vec![1.0, 2.0]).is_nondegenerate());
        assert!(!SimplexOpSpec::alternating(3).is_nondegenerate());
        assert!(SimplexOpSpec::plain(4).is_nondegenerate());
    }

    #[test]
    fn errors() {
        let f = mode(1, 32);
        let g = mode(1, 64);
        assert!(simplex_apply(&SimplexOpSpec::plain(2), &[f.clone(), g]).is_err());
        assert!(simplex_apply(&SimplexOpSpec::plain(2), std::slice::from_ref(&f)).is_err());
        let big = GridFunction::zeros(1 << 15, 1.0).unwrap();
        assert!(matches!(
            simplex_apply(&SimplexOpSpec::plain(2), &[big.clone(), big]),
            Err(Error::NumericGuard(_))
        ));
        assert!(hoelder_ratio(&SimplexOpSpec::plain(1), &[GridFunction::zeros(32, 1.0).unwrap()], 2.0).is_err());
    }

    #[test]
    fn bht_pure_modes() {
        let n = 4096;
        let (f1, f2) = (mode(3, n), mode(4, n));
        let k = bht_kernel(&f1, &f2).unwrap();
        let s = bht_symbol_apply(&f1, &f2).unwrap();
        assert!(k.band_limited);
        assert!(close(&k.output, &s, 1e-3 * PI));
        let want = mode(7, n).scale(C64::new(0.0, PI));
        assert!(close(&s, &want, 1e-12));
        let z = bht_kernel(&f1, &GridFunction::zeros(n, 1.0).unwrap()).unwrap();
        assert!(z.output.samples().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn t3_kernel_matches_symbol_on_modes() {
        let n = 256;
        for variant in [T3Variant::Plus, T3Variant::Minus] {
            let fs = [mode(2, n), mode(5, n), mode(-3, n)];
            let k = t3_kernel(&fs[0], &fs[1], &fs[2], variant).unwrap();
            let s = t3_symbol_apply(&fs[0], &fs[1], &fs[2], variant).unwrap();
            let err = k.output.zip_with(&s, |a, b| a - b).unwrap().l2_norm() / s.l2_norm();
            assert!(err < 0.1, "{variant:?} {err}");
        }
    }

    #[test]
    fn trivial_separable_plan_is_product() {
        let n = 32;
        let fs: Vec<GridFunction> = (0..3)
            .map(|s| GridFunction::from_preset(&Preset::RandomBandlimited { band: 6, seed: s }, n, 2.0).unwrap())
            .collect();
        let one = Multiplier::Fn(Arc::new(|_| 1.0));
        let plan = SeparablePlan::Multiply {
            child: Box::new(SeparablePlan::Product(vec![
                SeparablePlan::Input(0),
                SeparablePlan::Multiply { child: Box::new(SeparablePlan::Input(1)), multiplier: one.clone() },
                SeparablePlan::Input(2),
            ])),
            multiplier: one,
        };
        let out = separable_apply(&plan, &fs).unwrap();
        assert!(close(&out, &full_product_reference(&fs).unwrap(), 1e-12));
        let bad = SeparablePlan::Product(vec![SeparablePlan::Input(0), SeparablePlan::Input(0)]);
        assert!(separable_apply(&bad, &fs[..1]).is_err());
    }
}
