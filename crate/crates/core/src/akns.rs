//! AKNS systems `u' = iλDu + Nu` through the substitution
//! `u_k = e^{iλd_k x} v_k`, `v' = Wv`: bottom-up and Runge–Kutta solvers,
//! Picard iterated integrals, the Carleson comparison for `2×2` systems and
//! the nondegeneracy test for phase vectors.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_traits::Zero;
use ode_solvers::{DVector, Dopri5, System};
use serde::{Deserialize, Serialize};

use crate::dyadic::{rat_from_f64, Rat};
use crate::error::{Error, Result};
use crate::grid::{dft, idft, ifft_in_place, GridFunction, Preset, Spectrum, C64};
use crate::ops::{maximal_apply, SimplexOpSpec};
use crate::par::par_map;

pub const MIN_STEPS: usize = 1000;
/// Target relative accuracy of both solvers.
pub const SOLVE_TOL: f64 = 1e-8;
/// Largest accepted achieved error before a solve is reported as failed.
pub const SOLVE_GUARD: f64 = 1e-6;
pub const MAX_PICARD_ORDER: usize = 4;
const NODES_PER_CELL: usize = 8;
const MAX_REFINE: u32 = 6;

#[derive(Clone)]
pub enum Potential {
    Zero,
    /// `amplitude·e^{-((x-center)/width)²}`.
    Gaussian { center: f64, width: f64, amplitude: f64 },
    /// `amplitude·χ_{[a,b)}`.
    Indicator { a: f64, b: f64, amplitude: f64 },
    /// `Σ c_k e^{2πikx/L}`; the trigonometric interpolant of a grid function.
    Trig { period: f64, modes: Vec<(i64, C64)> },
    Custom(Arc<dyn Fn(f64) -> C64 + Send + Sync>),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Zero => write!(f, "Zero"),
            Potential::Gaussian { center, width, amplitude } => {
                write!(f, "Gaussian {{ center: {center}, width: {width}, amplitude: {amplitude} }}")
            }
            Potential::Indicator { a, b, amplitude } => write!(f, "Indicator {{ a: {a}, b: {b}, amplitude: {amplitude} }}"),
            Potential::Trig { period, modes } => write!(f, "Trig {{ period: {period}, modes: {} }}", modes.len()),
            Potential::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Potential {
    pub fn from_grid(g: &GridFunction) -> Self {
        let s = dft(g);
        let cmax = s.coefficients().iter().map(|c| c.norm()).fold(0.0, f64::max);
        let modes = s.freqs().map(|k| (k, s.coeff(k))).filter(|(_, c)| c.norm() > 1e-15 * cmax).collect();
        Potential::Trig { period: g.period(), modes }
    }

    pub fn custom(f: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Potential::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> C64 {
        match self {
            Potential::Zero => C64::zero(),
            Potential::Gaussian { center, width, amplitude } => C64::new(amplitude * (-((x - center) / width).powi(2)).exp(), 0.0),
            Potential::Indicator { a, b, amplitude } => {
                if *a <= x && x < *b {
                    C64::new(*amplitude, 0.0)
                } else {
                    C64::zero()
                }
            }
            Potential::Trig { period, modes } => {
                modes.iter().map(|&(k, c)| c * C64::from_polar(1.0, 2.0 * PI * k as f64 * x / period)).sum()
            }
            Potential::Custom(f) => f(x),
        }
    }
}

/// Serializable description of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Gaussian { center: f64, width: f64, amplitude: f64 },
    Indicator { a: f64, b: f64, amplitude: f64 },
    Grid { preset: Preset, n: usize, period: f64 },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        Ok(match *self {
            PotentialSpec::Zero => Potential::Zero,
            PotentialSpec::Gaussian { center, width, amplitude } => Potential::Gaussian { center, width, amplitude },
            PotentialSpec::Indicator { a, b, amplitude } => Potential::Indicator { a, b, amplitude },
            PotentialSpec::Grid { ref preset, n, period } => Potential::from_grid(&GridFunction::from_preset(preset, n, period)?),
        })
    }
}

#[derive(Debug, Clone)]
pub struct AknsSystem {
    d: Vec<f64>,
    /// `(l, m, a_lm)` with `l ≠ m`.
    entries: Vec<(usize, usize, Potential)>,
    lambda: f64,
}

impl AknsSystem {
    pub fn new(d: Vec<f64>, entries: Vec<(usize, usize, Potential)>, lambda: f64) -> Result<Self> {
        let n = d.len();
        if n < 2 {
            return Err(Error::Domain("need at least two equations".into()));
        }
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite and nonzero, got {lambda}")));
        }
        for a in 0..n {
            for b in a + 1..n {
                if d[a] == d[b] {
                    return Err(Error::Domain(format!("d_{} = d_{} = {}", a + 1, b + 1, d[a])));
                }
            }
        }
        for &(l, m, _) in &entries {
            if l >= n || m >= n {
                return Err(Error::Domain(format!("entry ({l},{m}) outside {n}×{n}")));
            }
            if l == m {
                return Err(Error::Domain(format!("diagonal entry ({l},{l}) must vanish")));
            }
        }
        Ok(Self { d, entries, lambda })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn is_upper_triangular(&self) -> bool {
        self.entries.iter().all(|&(l, m, _)| l < m)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.d.clone(), self.entries.clone(), lambda)
    }

    /// `d_k + shift` for every `k`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        Self::new(self.d.iter().map(|d| d + shift).collect(), self.entries.clone(), self.lambda)
    }

    /// `(Wv)_l = Σ_m a_lm(x) e^{iλ(d_l-d_m)x} v_m`.
    pub fn apply_w(&self, x: f64, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::zero(); self.n()];
        for (l, m, a) in &self.entries {
            let phase = C64::from_polar(1.0, self.lambda * (self.d[*l] - self.d[*m]) * x);
            out[*l] += a.eval(x) * phase * v[*m];
        }
        out
    }

    fn row(&self, l: usize) -> impl Iterator<Item = &(usize, usize, Potential)> {
        self.entries.iter().filter(move |e| e.0 == l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    BottomUp,
    RungeKutta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub x: Vec<f64>,
    /// `v[i][k] = v_k(x_i)`.
    pub v: Vec<Vec<C64>>,
    /// Estimated relative error.
    pub achieved: f64,
    pub method: SolveMethod,
}

impl Solution {
    /// `u_k = e^{iλd_k x} v_k`.
    pub fn u(&self, sys: &AknsSystem) -> Vec<Vec<C64>> {
        self.x
            .iter()
            .zip(&self.v)
            .map(|(&x, v)| v.iter().zip(&sys.d).map(|(vk, dk)| vk * C64::from_polar(1.0, sys.lambda * dk * x)).collect())
            .collect()
    }

    pub fn sup(&self, k: usize) -> f64 {
        self.v.iter().map(|v| v[k].norm()).fold(0.0, f64::max)
    }
}

/// Gauss–Legendre collocation on equal cells with the matrix
/// `S_ij = ∫_{-1}^{t_i} ℓ_j` of Lagrange-basis antiderivatives.
struct Colloc {
    t: Vec<f64>,
    w: Vec<f64>,
    s: Vec<Vec<f64>>,
    x0: f64,
    h: f64,
    cells: usize,
}

fn legendre_all(m: usize, t: f64) -> Vec<f64> {
    let mut p = vec![1.0, t];
    for k in 1..m {
        let next = ((2 * k + 1) as f64 * t * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
        p.push(next);
    }
    p
}

impl Colloc {
    fn new(x0: f64, x1: f64, cells: usize) -> Self {
        let m = NODES_PER_CELL;
        let gl = GaussLegendre::new(NonZeroUsize::new(m).expect("positive"));
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let t: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        // ℓ_j = w_j Σ_p (p + 1/2) P_p(t_j) P_p, and ∫_{-1}^t P_p = (P_{p+1} - P_{p-1})(t)/(2p+1)
        let pt: Vec<Vec<f64>> = t.iter().map(|&ti| legendre_all(m, ti)).collect();
        let s = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let mut acc = 0.5 * (t[i] + 1.0);
                        for p in 1..m {
                            acc += 0.5 * (pt[i][p + 1] - pt[i][p - 1]) * pt[j][p];
                        }
                        w[j] * acc
                    })
                    .collect()
            })
            .collect();
        Self { t, w, s, x0, h: (x1 - x0) / cells as f64, cells }
    }

    fn node(&self, c: usize, i: usize) -> f64 {
        self.x0 + self.h * (c as f64 + 0.5 * (self.t[i] + 1.0))
    }

    fn bound(&self, c: usize) -> f64 {
        self.x0 + self.h * c as f64
    }

    /// Antiderivative from `start` of values given at every node; returns
    /// values at the nodes and at the cell boundaries.
    fn cumulative(&self, g: &[C64], start: C64) -> (Vec<C64>, Vec<C64>) {
        let m = self.t.len();
        let mut nodes = Vec::with_capacity(g.len());
        let mut bounds = Vec::with_capacity(self.cells + 1);
        let mut left = start;
        bounds.push(left);
        for c in 0..self.cells {
            let gc = &g[c * m..(c + 1) * m];
            for i in 0..m {
                let s: C64 = gc.iter().zip(&self.s[i]).map(|(v, sij)| v * sij).sum();
                nodes.push(left + s * (0.5 * self.h));
            }
            left += gc.iter().zip(&self.w).map(|(v, wj)| v * wj).sum::<C64>() * (0.5 * self.h);
            bounds.push(left);
        }
        (nodes, bounds)
    }

    fn at_nodes(&self, f: impl Fn(f64) -> C64) -> Vec<C64> {
        let m = self.t.len();
        (0..self.cells * m).map(|q| f(self.node(q / m, q % m))).collect()
    }
}

/// Per-component values at nodes and boundaries.
type Traj = (Vec<Vec<C64>>, Vec<Vec<C64>>);

fn bottom_up_once(sys: &AknsSystem, co: &Colloc, v0: &[C64]) -> Traj {
    let n = sys.n();
    let q = co.cells * co.t.len();
    let mut nodes = vec![vec![]; n];
    let mut bounds = vec![vec![]; n];
    for k in (0..n).rev() {
        let mut g = vec![C64::zero(); q];
        for (_, m, a) in sys.row(k) {
            let dd = sys.lambda * (sys.d[k] - sys.d[*m]);
            for (p, gp) in g.iter_mut().enumerate() {
                let x = co.node(p / co.t.len(), p % co.t.len());
                *gp += a.eval(x) * C64::from_polar(1.0, dd * x) * nodes[*m][p];
            }
        }
        let (nd, bd) = co.cumulative(&g, v0[k]);
        nodes[k] = nd;
        bounds[k] = bd;
    }
    (nodes, bounds)
}

fn rel_diff(a: &[Vec<C64>], b: &[Vec<C64>], stride: usize) -> f64 {
    let scale = a.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
    let mut err: f64 = 0.0;
    for (ka, kb) in a.iter().zip(b) {
        for (i, za) in ka.iter().enumerate() {
            err = err.max((za - kb[i * stride]).norm());
        }
    }
    err / scale
}

fn transpose(per_comp: &[Vec<C64>]) -> Vec<Vec<C64>> {
    (0..per_comp[0].len()).map(|i| per_comp.iter().map(|c| c[i]).collect()).collect()
}

fn check_range(x0: f64, x1: f64, steps: usize, v0: &[C64], n: usize) -> Result<()> {
    if steps < MIN_STEPS {
        return Err(Error::Precondition(format!("steps {steps} below {MIN_STEPS}")));
    }
    if !(x1 > x0) || !x0.is_finite() || !x1.is_finite() {
        return Err(Error::Domain(format!("empty range [{x0}, {x1}]")));
    }
    if v0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v0.len() });
    }
    Ok(())
}

/// Triangular solve from `v_n` upward, each component an antiderivative of
/// known functions; cells are doubled until two resolutions agree to
/// [`SOLVE_TOL`].
pub fn solve_bottom_up(sys: &AknsSystem, x0: f64, x1: f64, steps: usize, v0: &[C64]) -> Result<Solution> {
    check_range(x0, x1, steps, v0, sys.n())?;
    if !sys.is_upper_triangular() {
        return Err(Error::Precondition("bottom-up solve needs an upper-triangular system".into()));
    }
    let mut cells = steps;
    let mut prev = bottom_up_once(sys, &Colloc::new(x0, x1, cells), v0).1;
    let mut achieved = f64::INFINITY;
    for _ in 0..MAX_REFINE {
        let fine = bottom_up_once(sys, &Colloc::new(x0, x1, 2 * cells), v0).1;
        achieved = rel_diff(&prev, &fine, 2);
        cells *= 2;
        prev = fine;
        if achieved <= SOLVE_TOL {
            break;
        }
    }
    if achieved > SOLVE_GUARD {
        return Err(Error::NumericGuard(format!("bottom-up solve reached only {achieved:e}")));
    }
    let sampled: Vec<Vec<C64>> = prev.iter().map(|c| c.iter().step_by(cells / steps).copied().collect()).collect();
    let h = (x1 - x0) / steps as f64;
    Ok(Solution {
        x: (0..=steps).map(|i| x0 + h * i as f64).collect(),
        v: transpose(&sampled),
        achieved,
        method: SolveMethod::BottomUp,
    })
}

struct Rhs<'a>(&'a AknsSystem);

impl System<f64, DVector<f64>> for Rhs<'_> {
    fn system(&self, x: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let n = self.0.n();
        let v: Vec<C64> = (0..n).map(|k| C64::new(y[2 * k], y[2 * k + 1])).collect();
        for (k, w) in self.0.apply_w(x, &v).into_iter().enumerate() {
            dy[2 * k] = w.re;
            dy[2 * k + 1] = w.im;
        }
    }
}

fn dopri(sys: &AknsSystem, x0: f64, x1: f64, steps: usize, v0: &[C64], rtol: f64) -> Result<Vec<Vec<C64>>> {
    let y0 = DVector::from_iterator(2 * v0.len(), v0.iter().flat_map(|z| [z.re, z.im]));
    let h = (x1 - x0) / steps as f64;
    let mut stepper = Dopri5::new(Rhs(sys), x0, x1, h, y0, rtol, rtol * 1e-4);
    stepper.integrate().map_err(|e| Error::NumericGuard(format!("Runge–Kutta: {e}")))?;
    let xs = stepper.x_out();
    let ys = stepper.y_out();
    // dense output lands on x0 + ih up to rounding; take the nearest sample
    let mut out = Vec::with_capacity(steps + 1);
    let mut idx = 0;
    for i in 0..=steps {
        let target = x0 + h * i as f64;
        while idx + 1 < xs.len() && (xs[idx + 1] - target).abs() <= (xs[idx] - target).abs() {
            idx += 1;
        }
        if (xs[idx] - target).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::NumericGuard(format!("no dense output near x = {target}")));
        }
        let y = &ys[idx];
        out.push((0..v0.len()).map(|k| C64::new(y[2 * k], y[2 * k + 1])).collect());
    }
    Ok(out)
}

/// Dormand–Prince solve of the full system; the achieved error is estimated
/// against a run at a hundredth of the tolerance.
pub fn solve_rk(sys: &AknsSystem, x0: f64, x1: f64, steps: usize, v0: &[C64]) -> Result<Solution> {
    check_range(x0, x1, steps, v0, sys.n())?;
    let v = dopri(sys, x0, x1, steps, v0, SOLVE_TOL)?;
    let tight = dopri(sys, x0, x1, steps, v0, SOLVE_TOL * 1e-2)?;
    let achieved = rel_diff(&transpose_back(&v), &transpose_back(&tight), 1);
    if achieved > SOLVE_GUARD {
        return Err(Error::NumericGuard(format!("Runge–Kutta solve reached only {achieved:e}")));
    }
    let h = (x1 - x0) / steps as f64;
    Ok(Solution { x: (0..=steps).map(|i| x0 + h * i as f64).collect(), v, achieved, method: SolveMethod::RungeKutta })
}

fn transpose_back(rows: &[Vec<C64>]) -> Vec<Vec<C64>> {
    (0..rows[0].len()).map(|k| rows.iter().map(|r| r[k]).collect()).collect()
}

/// Bottom-up for upper-triangular systems, Runge–Kutta otherwise.
pub fn solve(sys: &AknsSystem, x0: f64, x1: f64, steps: usize, v0: &[C64]) -> Result<Solution> {
    if sys.is_upper_triangular() {
        solve_bottom_up(sys, x0, x1, steps, v0)
    } else {
        solve_rk(sys, x0, x1, steps, v0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTerms {
    pub x: Vec<f64>,
    /// `terms[k][i][l]`: component `l` of the order-`k` term at `x_i`.
    pub terms: Vec<Vec<Vec<C64>>>,
}

impl PicardTerms {
    pub fn partial_sum(&self, i: usize) -> Vec<C64> {
        let n = self.terms[0][i].len();
        (0..n).map(|l| self.terms.iter().map(|t| t[i][l]).sum()).collect()
    }
}

/// `P_0 = v_0`, `P_k(x) = ∫_{x_0}^x W P_{k-1}`, i.e. the iterated integrals
/// over `x_0 < y_1 < … < y_k < x` of `W(y_k)⋯W(y_1) v_0`.
pub fn picard_terms(sys: &AknsSystem, order: usize, x0: f64, x1: f64, steps: usize, v0: &[C64]) -> Result<PicardTerms> {
    if order > MAX_PICARD_ORDER {
        return Err(Error::Precondition(format!("order {order} above {MAX_PICARD_ORDER}")));
    }
    check_range(x0, x1, steps, v0, sys.n())?;
    let n = sys.n();
    let co = Colloc::new(x0, x1, steps);
    let q = co.cells * co.t.len();
    let mut prev: Vec<Vec<C64>> = (0..n).map(|l| vec![v0[l]; q]).collect();
    let mut terms = vec![transpose(&(0..n).map(|l| vec![v0[l]; steps + 1]).collect::<Vec<_>>())];
    for _ in 0..order {
        let mut nodes = vec![];
        let mut bounds = vec![];
        for l in 0..n {
            let mut g = vec![C64::zero(); q];
            for (_, m, a) in sys.row(l) {
                let dd = sys.lambda * (sys.d[l] - sys.d[*m]);
                for (p, gp) in g.iter_mut().enumerate() {
                    let x = co.node(p / co.t.len(), p % co.t.len());
                    *gp += a.eval(x) * C64::from_polar(1.0, dd * x) * prev[*m][p];
                }
            }
            let (nd, bd) = co.cumulative(&g, C64::zero());
            nodes.push(nd);
            bounds.push(bd);
        }
        terms.push(transpose(&bounds));
        prev = nodes;
    }
    Ok(PicardTerms { x: (0..=steps).map(|i| co.bound(i)).collect(), terms })
}

/// `∫_{x_0 < y_1 < … < y_k < x} V(y_1)⋯V(y_k)` at the cell boundaries.
pub fn iterated_integral(v: &Potential, k: usize, x0: f64, x1: f64, steps: usize) -> Result<Vec<C64>> {
    if k > MAX_PICARD_ORDER {
        return Err(Error::Precondition(format!("order {k} above {MAX_PICARD_ORDER}")));
    }
    check_range(x0, x1, steps, &[C64::zero()], 1)?;
    let co = Colloc::new(x0, x1, steps);
    let vals = co.at_nodes(|x| v.eval(x));
    let mut prev_nodes = vec![C64::new(1.0, 0.0); vals.len()];
    let mut prev_bounds = vec![C64::new(1.0, 0.0); steps + 1];
    for _ in 0..k {
        let g: Vec<C64> = vals.iter().zip(&prev_nodes).map(|(a, b)| a * b).collect();
        let (nd, bd) = co.cumulative(&g, C64::zero());
        prev_nodes = nd;
        prev_bounds = bd;
    }
    Ok(prev_bounds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegReport {
    pub ok: bool,
    /// First `(j₁, j₂)`, one-based with `j₁ < j₂`, where `Σ_{j₁..j₂} α_j = 0`.
    pub violation: Option<(usize, usize)>,
}

/// Every sum of two or more consecutive entries must be nonzero; exact on the
/// binary values of the inputs.
pub fn nondegeneracy(alpha: &[f64]) -> Result<NondegReport> {
    let a: Vec<Rat> = alpha.iter().map(|&x| rat_from_f64(x)).collect::<Result<_>>()?;
    for j1 in 0..a.len() {
        let mut s = a[j1].clone();
        for (j2, aj) in a.iter().enumerate().skip(j1 + 1) {
            s += aj;
            if s.is_zero() {
                return Ok(NondegReport { ok: false, violation: Some((j1 + 1, j2 + 1)) });
            }
        }
    }
    Ok(NondegReport { ok: true, violation: None })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarlesonRow {
    pub lambda: f64,
    /// `λ` moved so that `λ(d₁-d₂)` is a grid frequency `2πs/L`.
    pub snapped: f64,
    pub snap_error: f64,
    pub shift: i64,
    pub sup_v1: f64,
    /// `max_K |Σ_{m<K} ∫_{x_m}^{x_{m+1}} f(y)e^{iλ(d₁-d₂)y} dy|` via the
    /// one-dimensional maximal operator.
    pub carleson: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Cell integrals `G_m = ∫_{x_m}^{x_{m+1}} f(y) e^{2πisy/L} dy`, exact for
/// the trigonometric interpolant of `f`.
fn cell_integrals(f: &GridFunction, s: i64) -> Vec<C64> {
    let n = f.n();
    let l = f.period();
    let h = l / n as f64;
    let spec = dft(f);
    let mut bins = vec![C64::zero(); n];
    for k in spec.freqs() {
        let c = spec.coeff(k);
        if c == C64::zero() {
            continue;
        }
        let q = k + s;
        let e = if q == 0 {
            C64::new(h, 0.0)
        } else {
            (C64::from_polar(1.0, 2.0 * PI * q as f64 * h / l) - 1.0) / C64::new(0.0, 2.0 * PI * q as f64 / l)
        };
        bins[q.rem_euclid(n as i64) as usize] += c * e;
    }
    ifft_in_place(&mut bins);
    bins
}

/// The `2×2` upper-triangular system with `a₁₂ = f`, `v(0) = (C̃, C)`: the
/// sup of `|v₁|` on the grid against `|C|·(Carleson value) + |C̃|`.
pub fn carleson_bound_check(f: &GridFunction, d: (f64, f64), lambdas: &[f64], c: C64, c_tilde: C64) -> Result<Vec<CarlesonRow>> {
    let delta = d.0 - d.1;
    if delta == 0.0 {
        return Err(Error::Domain("d₁ = d₂".into()));
    }
    let (n, l) = (f.n(), f.period());
    let pot = Potential::from_grid(f);
    let rows = par_map(lambdas.len(), |i| -> Result<CarlesonRow> {
        let lambda = lambdas[i];
        let shift = (lambda * delta * l / (2.0 * PI)).round() as i64;
        if shift == 0 {
            return Err(Error::Domain(format!("lambda {lambda} snaps to zero")));
        }
        let snapped = 2.0 * PI * shift as f64 / (l * delta);
        let sys = AknsSystem::new(vec![d.0, d.1], vec![(0, 1, pot.clone())], snapped)?;
        let sol = solve(&sys, 0.0, l, n.max(MIN_STEPS), &[c_tilde, c])?;
        let sup_v1 = sol.sup(0);
        let g = cell_integrals(f, shift);
        let h = idft(&Spectrum::new(g, l)?);
        let carleson = maximal_apply(&SimplexOpSpec::plain(1), &[h])?.samples()[0].re;
        let bound = c.norm() * carleson + c_tilde.norm();
        let ratio = if sup_v1 == 0.0 { 0.0 } else { sup_v1 / bound };
        Ok(CarlesonRow { lambda, snapped, snap_error: (lambda - snapped).abs(), shift, sup_v1, carleson, bound, ratio })
    });
    rows.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collocation_integrates_polynomials() {
        let co = Colloc::new(0.0, 2.0, 3);
        let g = co.at_nodes(|x| C64::new(x.powi(7), 0.0));
        let (nodes, bounds) = co.cumulative(&g, C64::zero());
        assert!((bounds[3].re - 2f64.powi(8) / 8.0).abs() < 1e-12);
        let x = co.node(1, 2);
        assert!((nodes[8 + 2].re - x.powi(8) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn nondegeneracy_examples() {
        assert!(nondegeneracy(&[0.5 - 2.0, 2.0 - 3.25]).unwrap().ok);
        assert_eq!(nondegeneracy(&[1.0, -1.0]).unwrap().violation, Some((1, 2)));
        assert!(nondegeneracy(&[1.0, 2.0, 3.0]).unwrap().ok);
        assert_eq!(nondegeneracy(&[1.0, 2.0, -3.0, 5.0]).unwrap().violation, Some((1, 3)));
        assert!(nondegeneracy(&[0.1, 0.2, -0.3]).unwrap().ok);
    }

    #[test]
    fn invalid_systems_rejected() {
        assert!(AknsSystem::new(vec![1.0, 1.0], vec![], 1.0).is_err());
        assert!(AknsSystem::new(vec![1.0, 2.0], vec![(0, 0, Potential::Zero)], 1.0).is_err());
        assert!(AknsSystem::new(vec![1.0, 2.0], vec![], 0.0).is_err());
        let s = AknsSystem::new(vec![1.0, 2.0], vec![], 1.0).unwrap();
        assert!(matches!(solve(&s, 0.0, 1.0, 10, &[C64::zero(); 2]), Err(Error::Precondition(_))));
        assert!(picard_terms(&s, 5, 0.0, 1.0, 1000, &[C64::zero(); 2]).is_err());
    }
}
