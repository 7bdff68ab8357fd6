//! Smooth symbols adapted to simplex regions.
//!
//! The half-plane `{y₁ < y₂}` is split exactly into scale pieces
//! `P_k = B_k - B_{k+1}` with `B_k(y₁, y₂) = Σ_p φ^k_p(y₁) H_{k,p}(y₂)`, where
//! `φ^k_p` is a smoothstep partition of unity subordinate to the shifted dyadic
//! intervals `[p·2^k/3, p·2^k/3 + 2^k]` and `H_{k,p}` is a smooth step placed
//! `A·2^k` to the right of that interval. Inserting the partitions at scale
//! `k+1` in both variables writes each `P_k` as a finite sum of tensor
//! products of bumps on a quasi-cube of side `2^{k+1}`, so
//! `Σ_k P_k = χ_{y₁<y₂}` holds identically and vanishes on `y₁ ≥ y₂`.
//!
//! Products over consecutive pairs restricted to comparable scales give
//! `m_a`; nesting them along a tree with a scale gap between parent and son
//! gives `m_G`. Coordinates are `y_j = a_j x_j`, so cubes are shifted dyadic in
//! the rescaled variables.

pub mod bump;
pub mod fixing;

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dyadic::{RegionParams, ShiftedDyadicInterval};
use crate::error::{Error, Result};
use crate::trees::{self, coverage_report, retract_pair, shares_cut, RootedTree, VertexId};

pub use bump::{smoothstep, Bump1D, DEFAULT_ORDER};

pub const MAX_SYMBOL_LEAVES: usize = 6;
pub const DEFAULT_TRUNC: u32 = 8;
pub const TELESCOPE_COVERAGE_SAMPLES: usize = 10_000;
pub const TELESCOPE_COVERAGE_SEED: u64 = 0x5eed_0003;

/// Offsets of the Whitney construction in units of `2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WhitneyGeometry {
    /// Distance of the step `H_{k,p}` from the interval start.
    pub offset: f64,
    /// Width of the step.
    pub width: f64,
    pub order: u32,
}

impl WhitneyGeometry {
    /// `A = 4·c_dist + 5` keeps every cube `Q` of a piece at distance in
    /// `[c_dist·diam Q, 100·c_dist·diam Q]` from the diagonal.
    pub fn from_params(rp: &RegionParams, order: u32) -> Self {
        Self { offset: 4.0 * rp.c_dist + 5.0, width: 1.0, order }
    }

    /// Length in octaves of the set of `k` with `P_k ≠ 0` at a fixed point.
    pub fn window(&self) -> f64 {
        (2.0 * (self.offset + self.width - 1.0 / 6.0) / (self.offset - 5.0 / 6.0)).log2()
    }

    fn scale_range(&self, t: f64) -> std::ops::RangeInclusive<i32> {
        let lo = (t / (2.0 * (self.offset + self.width))).log2().floor() as i32 - 1;
        let hi = (t / (self.offset - 5.0 / 6.0)).log2().ceil() as i32 + 1;
        lo..=hi
    }

    /// `φ^k_p`, supported in `((p+½)δ, (p+5/2)δ)` with `δ = 2^k/3`.
    pub fn partition_bump(&self, k: i32, p: i64) -> Bump1D {
        let d = 2f64.powi(k) / 3.0;
        let pf = p as f64;
        Bump1D {
            rise_start: (pf + 0.5) * d,
            rise_width: d,
            fall_start: (pf + 1.5) * d,
            fall_width: d,
            order: self.order,
        }
    }

    fn step(&self, k: i32, p: i64, y: f64) -> f64 {
        let s = 2f64.powi(k);
        smoothstep(self.order, (y - (p as f64 / 3.0 + self.offset) * s) / (self.width * s))
    }

    fn partition_indices(&self, k: i32, y: f64) -> std::ops::RangeInclusive<i64> {
        let d = 2f64.powi(k) / 3.0;
        let u = y / d;
        ((u - 2.5).floor() as i64)..=((u - 0.5).ceil() as i64)
    }
}

/// Shifted dyadic interval `[p·2^k/3, p·2^k/3 + 2^k]`.
pub fn partition_interval(k: i32, p: i64) -> ShiftedDyadicInterval {
    let (kk, alpha) = if k.rem_euclid(2) == 0 {
        let a = p.rem_euclid(3);
        ((p - a) / 3, a)
    } else {
        let a = (-p).rem_euclid(3);
        ((p + a) / 3, a)
    };
    ShiftedDyadicInterval { j: k, k: kk, alpha_index: alpha as u8 }
}

/// One tensor-product term of a half-plane piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubeTerm {
    pub k: i32,
    pub p: i64,
    pub p_next: i64,
    pub q: i64,
    pub first: f64,
    pub second: f64,
}

impl CubeTerm {
    /// Quasi-cube `(I^{k+1}_{p_next}, I^{k+1}_q)` carrying the term.
    pub fn cube(&self) -> (ShiftedDyadicInterval, ShiftedDyadicInterval) {
        (partition_interval(self.k + 1, self.p_next), partition_interval(self.k + 1, self.q))
    }

    pub fn value(&self) -> f64 {
        self.first * self.second
    }
}

/// Nonzero terms of the half-plane decomposition at `(y1, y2)`.
pub fn halfplane_terms(geom: &WhitneyGeometry, y1: f64, y2: f64) -> Vec<CubeTerm> {
    let t = y2 - y1;
    let mut out = vec![];
    if !(t > 0.0) || !t.is_finite() {
        return out;
    }
    for k in geom.scale_range(t) {
        for p in geom.partition_indices(k, y1) {
            let a = geom.partition_bump(k, p).eval(y1);
            if a == 0.0 {
                continue;
            }
            for p_next in geom.partition_indices(k + 1, y1) {
                let b = geom.partition_bump(k + 1, p_next).eval(y1);
                if b == 0.0 {
                    continue;
                }
                let band = geom.step(k, p, y2) - geom.step(k + 1, p_next, y2);
                if band == 0.0 {
                    continue;
                }
                for q in geom.partition_indices(k + 1, y2) {
                    let c = geom.partition_bump(k + 1, q).eval(y2);
                    if c == 0.0 {
                        continue;
                    }
                    out.push(CubeTerm { k, p, p_next, q, first: a * b, second: band * c });
                }
            }
        }
    }
    out
}

/// Index `(k, p, p_next, q)` of a half-plane term, valid on whole ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct TermIndex {
    pub k: i32,
    pub p: i64,
    pub p_next: i64,
    pub q: i64,
}

impl WhitneyGeometry {
    /// `φ^k_p(y₁) φ^{k+1}_{p_next}(y₁)`.
    pub fn first_factor(&self, t: &TermIndex, y1: f64) -> f64 {
        self.partition_bump(t.k, t.p).eval(y1) * self.partition_bump(t.k + 1, t.p_next).eval(y1)
    }

    /// `(H_{k,p} - H_{k+1,p_next})(y₂) φ^{k+1}_q(y₂)`.
    pub fn second_factor(&self, t: &TermIndex, y2: f64) -> f64 {
        (self.step(t.k, t.p, y2) - self.step(t.k + 1, t.p_next, y2)) * self.partition_bump(t.k + 1, t.q).eval(y2)
    }

    /// All terms that can be nonzero for `y₁ ∈ [a₁, b₁]`, `y₂ ∈ [a₂, b₂]`;
    /// requires `a₂ > b₁`.
    pub fn term_indices(&self, (a1, b1): (f64, f64), (a2, b2): (f64, f64)) -> Result<Vec<TermIndex>> {
        if !(a2 > b1 && a1 <= b1 && a2 <= b2) {
            return Err(Error::Domain("ranges must be ordered and separated".into()));
        }
        let ks = *self.scale_range(a2 - b1).start()..=*self.scale_range(b2 - a1).end();
        let span = |k: i32, a: f64, b: f64| {
            let (lo, hi) = (self.partition_indices(k, a), self.partition_indices(k, b));
            *lo.start()..=*hi.end()
        };
        let mut out = vec![];
        for k in ks {
            for p in span(k, a1, b1) {
                let (plo, phi) = self.partition_bump(k, p).support();
                for p_next in span(k + 1, a1, b1) {
                    let (nlo, nhi) = self.partition_bump(k + 1, p_next).support();
                    if plo.max(nlo) >= phi.min(nhi) {
                        continue;
                    }
                    for q in span(k + 1, a2, b2) {
                        out.push(TermIndex { k, p, p_next, q });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Nonzero `(k, P_k(y1, y2))`, increasing in `k`.
pub fn halfplane_pieces(geom: &WhitneyGeometry, y1: f64, y2: f64) -> Vec<(i32, f64)> {
    let mut out: Vec<(i32, f64)> = vec![];
    for term in halfplane_terms(geom, y1, y2) {
        match out.last_mut() {
            Some((k, v)) if *k == term.k => *v += term.value(),
            _ => out.push((term.k, term.value())),
        }
    }
    out.retain(|&(_, v)| v != 0.0);
    out
}

/// `scale · Σ_{l=lo}^{hi} ξ_l` with 0-based inclusive indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearForm {
    pub lo: usize,
    pub hi: usize,
    pub scale: f64,
}

impl LinearForm {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.scale * xi[self.lo..=self.hi].iter().sum::<f64>()
    }

    /// Average over a 1-based leaf run `(l, r)`.
    pub fn average(l: usize, r: usize) -> Self {
        Self { lo: l - 1, hi: r - 1, scale: 1.0 / (r + 1 - l) as f64 }
    }
}

/// Product over consecutive pairs, restricted to pair scales within `k_comp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AvecFamily {
    pub forms: Vec<LinearForm>,
    pub k_comp: Option<i32>,
    pub geom: WhitneyGeometry,
}

impl AvecFamily {
    /// `(k, m_a^k)` with `k` the scale of the first pair.
    pub fn pieces(&self, xi: &[f64]) -> Vec<(i32, f64)> {
        let y: Vec<f64> = self.forms.iter().map(|f| f.eval(xi)).collect();
        avec_pieces_at(&self.geom, &y, self.k_comp)
    }
}

fn avec_pieces_at(geom: &WhitneyGeometry, y: &[f64], k_comp: Option<i32>) -> Vec<(i32, f64)> {
    let lists: Vec<Vec<(i32, f64)>> =
        y.windows(2).map(|w| halfplane_pieces(geom, w[0], w[1])).collect();
    if lists.iter().any(|l| l.is_empty()) {
        return vec![];
    }
    let mut out: Vec<(i32, f64)> = vec![];
    for &(k1, v1) in &lists[0] {
        let mut total = 0.0;
        // depth-first over the remaining pairs tracking min and max scale
        fn go(lists: &[Vec<(i32, f64)>], i: usize, lo: i32, hi: i32, acc: f64, kc: Option<i32>, total: &mut f64) {
            if i == lists.len() {
                *total += acc;
                return;
            }
            for &(k, v) in &lists[i] {
                let (nlo, nhi) = (lo.min(k), hi.max(k));
                if kc.map_or(true, |c| nhi - nlo <= c) {
                    go(lists, i + 1, nlo, nhi, acc * v, kc, total);
                }
            }
        }
        go(&lists, 1, k1, k1, v1, k_comp, &mut total);
        if total != 0.0 {
            out.push((k1, total));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexSymbol {
    pub vertex: VertexId,
    pub family: AvecFamily,
    /// Internal sons, by vertex id.
    pub internal_sons: Vec<VertexId>,
}

/// Scale-gapped nesting of vertex symbols along a tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeFamily {
    #[serde(serialize_with = "ser_tree")]
    pub tree: RootedTree,
    pub vertices: HashMap<VertexId, VertexSymbol>,
    pub k_sep: i32,
}

fn ser_tree<S: serde::Serializer>(t: &RootedTree, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_paren())
}

impl TreeFamily {
    /// `(k, m_G^k)` with `k` the root scale.
    pub fn pieces(&self, xi: &[f64]) -> Vec<(i32, f64)> {
        if self.tree.leaves() < 2 {
            return vec![(0, 1.0)];
        }
        self.vertex_pieces(self.tree.root(), xi)
    }

    fn vertex_pieces(&self, v: VertexId, xi: &[f64]) -> Vec<(i32, f64)> {
        let vs = &self.vertices[&v];
        let base = vs.family.pieces(xi);
        if base.is_empty() {
            return base;
        }
        let sons: Vec<Vec<(i32, f64)>> =
            vs.internal_sons.iter().map(|&s| self.vertex_pieces(s, xi)).collect();
        base.into_iter()
            .filter_map(|(k, val)| {
                let f: f64 = sons
                    .iter()
                    .map(|l| l.iter().filter(|(ks, _)| *ks <= k - self.k_sep).map(|(_, x)| x).sum::<f64>())
                    .product();
                let v = val * f;
                (v != 0.0).then_some((k, v))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ScaleFamily {
    Avec(AvecFamily),
    Tree(TreeFamily),
}

impl ScaleFamily {
    pub fn pieces(&self, xi: &[f64]) -> Vec<(i32, f64)> {
        match self {
            ScaleFamily::Avec(f) => f.pieces(xi),
            ScaleFamily::Tree(f) => f.pieces(xi),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolExpr {
    Const(f64),
    /// Exact `χ_{ξ₁<…<ξ_n}`.
    Simplex { n: usize },
    BumpOnLinearForm { bump: Bump1D, form: LinearForm },
    Product(Vec<Symbol>),
    WeightedSum(Vec<(f64, Symbol)>),
    /// Lazily generated `Σ_k` over quasi-cube families with `l(Q) ∼ 2^k`.
    ScaleRestrictedSum(ScaleFamily),
}

pub type Symbol = Arc<SymbolExpr>;

impl SymbolExpr {
    pub fn eval(self: &Arc<Self>, xi: &[f64]) -> f64 {
        let mut cache = HashMap::new();
        eval_cached(self, xi, &mut cache)
    }
}

fn eval_cached(s: &Symbol, xi: &[f64], cache: &mut HashMap<*const SymbolExpr, f64>) -> f64 {
    let key = Arc::as_ptr(s);
    if let Some(&v) = cache.get(&key) {
        return v;
    }
    let v = match s.as_ref() {
        SymbolExpr::Const(c) => *c,
        SymbolExpr::Simplex { n } => {
            if xi[..*n].windows(2).all(|w| w[0] < w[1]) {
                1.0
            } else {
                0.0
            }
        }
        SymbolExpr::BumpOnLinearForm { bump, form } => bump.eval(form.eval(xi)),
        SymbolExpr::Product(fs) => {
            let mut acc = 1.0;
            for f in fs {
                acc *= eval_cached(f, xi, cache);
                if acc == 0.0 {
                    break;
                }
            }
            acc
        }
        SymbolExpr::WeightedSum(ts) => ts.iter().map(|(w, f)| w * eval_cached(f, xi, cache)).sum(),
        SymbolExpr::ScaleRestrictedSum(fam) => fam.pieces(xi).iter().map(|(_, v)| v).sum(),
    };
    cache.insert(key, v);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolMeta {
    pub kind: String,
    pub tree: Option<String>,
    pub rp: RegionParams,
    pub trunc: u32,
    pub geometry: WhitneyGeometry,
    pub window_octaves: f64,
    pub k_sep: Option<i32>,
    pub k_comp: Option<i32>,
    /// `∼` constant of a region containing the support of `m_a`.
    pub support_c_comp: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BuiltSymbol {
    pub expr: Symbol,
    pub meta: SymbolMeta,
}

impl BuiltSymbol {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.expr.eval(xi)
    }

    /// Nonzero `(k, value)` of the top-level scale family.
    pub fn pieces(&self, xi: &[f64]) -> Vec<(i32, f64)> {
        match self.expr.as_ref() {
            SymbolExpr::ScaleRestrictedSum(f) => f.pieces(xi),
            _ => vec![(0, self.eval(xi))],
        }
    }

    pub fn meta_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.meta).unwrap_or(serde_json::Value::Null)
    }

    pub fn sample_csv(&self, points: &[Vec<f64>]) -> String {
        let d = points.first().map_or(0, |p| p.len());
        let mut s: String = (1..=d).map(|i| format!("xi{i},")).collect();
        s.push_str("value\n");
        for p in points {
            for x in p {
                s.push_str(&format!("{x:e},"));
            }
            s.push_str(&format!("{:e}\n", self.eval(p)));
        }
        s
    }
}

fn check_trunc(trunc: i64) -> Result<u32> {
    u32::try_from(trunc).map_err(|_| Error::Domain(format!("truncation order {trunc} must be >= 0")))
}

fn k_comp_for(c_comp: f64, geom: &WhitneyGeometry) -> i32 {
    (c_comp.log2() + geom.window()).ceil() as i32
}

/// `χ_{a₁x₁ < a₂x₂}` as an exact sum of tensor-product bumps.
pub fn halfplane_symbol(a1: f64, a2: f64, rp: &RegionParams, trunc: i64) -> Result<BuiltSymbol> {
    make_m_avec(&[a1, a2], rp, trunc)
}

/// Symbol equal to one on `R_a` for the given constants.
pub fn make_m_avec(a: &[f64], rp: &RegionParams, trunc: i64) -> Result<BuiltSymbol> {
    make_m_avec_with_order(a, rp, trunc, DEFAULT_ORDER)
}

pub fn make_m_avec_with_order(a: &[f64], rp: &RegionParams, trunc: i64, order: u32) -> Result<BuiltSymbol> {
    let trunc = check_trunc(trunc)?;
    rp.validate()?;
    if a.len() < 2 {
        return Err(Error::Domain("m_a needs d >= 2".into()));
    }
    if a.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::Domain("coefficients must be finite and positive".into()));
    }
    let geom = WhitneyGeometry::from_params(rp, order);
    let k_comp = (a.len() > 2).then(|| k_comp_for(rp.c_comp, &geom));
    let forms = a.iter().enumerate().map(|(j, &s)| LinearForm { lo: j, hi: j, scale: s }).collect();
    let family = AvecFamily { forms, k_comp, geom };
    Ok(BuiltSymbol {
        expr: Arc::new(SymbolExpr::ScaleRestrictedSum(ScaleFamily::Avec(family))),
        meta: SymbolMeta {
            kind: if a.len() == 2 { "halfplane".into() } else { "m_avec".into() },
            tree: None,
            rp: *rp,
            trunc,
            geometry: geom,
            window_octaves: geom.window(),
            k_sep: None,
            k_comp,
            support_c_comp: k_comp.map(|k| 2f64.powf(k as f64 + geom.window())),
        },
    })
}

/// Scale gap and per-vertex comparability window guaranteeing `m_G ≡ 1` on
/// `R_G(rp)` for trees with `n` leaves.
pub fn tree_scale_constants(n: usize, rp: &RegionParams, geom: &WhitneyGeometry) -> (i32, i32) {
    let inner = (n.saturating_sub(2)).max(1) as f64;
    let k_sep = ((rp.c_sep / inner).log2() - geom.window()).floor() as i32 + 1;
    let c_eff = rp.c_comp * (1.0 + n.saturating_sub(2) as f64 / rp.c_sep);
    (k_sep, k_comp_for(c_eff, geom))
}

pub fn make_m_g(g: &RootedTree, rp: &RegionParams, trunc: i64) -> Result<BuiltSymbol> {
    make_m_g_with_order(g, rp, trunc, DEFAULT_ORDER)
}

pub fn make_m_g_with_order(g: &RootedTree, rp: &RegionParams, trunc: i64, order: u32) -> Result<BuiltSymbol> {
    let trunc = check_trunc(trunc)?;
    rp.validate()?;
    let n = g.leaves();
    if n > MAX_SYMBOL_LEAVES {
        return Err(Error::NumericGuard(format!("symbol assembly limited to n <= {MAX_SYMBOL_LEAVES}")));
    }
    let geom = WhitneyGeometry::from_params(rp, order);
    let (k_sep, k_comp) = tree_scale_constants(n, rp, &geom);
    let mut vertices = HashMap::new();
    for v in g.internal_vertices() {
        let sons = g.children(v);
        let forms = sons
            .iter()
            .map(|&s| {
                let (l, r) = g.nodes()[s].span;
                LinearForm::average(l, r)
            })
            .collect::<Vec<_>>();
        let family = AvecFamily { k_comp: (forms.len() > 2).then_some(k_comp), forms, geom };
        let internal_sons = sons.iter().copied().filter(|&s| !g.is_leaf(s)).collect();
        vertices.insert(v, VertexSymbol { vertex: v, family, internal_sons });
    }
    let family = TreeFamily { tree: g.clone(), vertices, k_sep };
    Ok(BuiltSymbol {
        expr: Arc::new(SymbolExpr::ScaleRestrictedSum(ScaleFamily::Tree(family))),
        meta: SymbolMeta {
            kind: "m_G".into(),
            tree: Some(g.to_paren()),
            rp: *rp,
            trunc,
            geometry: geom,
            window_octaves: geom.window(),
            k_sep: Some(k_sep),
            k_comp: Some(k_comp),
            support_c_comp: Some(2f64.powf(k_comp as f64 + geom.window())),
        },
    })
}

/// Per-vertex gap ratios of a point: the smallest `min cut / max other gap`
/// and the largest `max cut / min cut` over internal vertices. A point lies in
/// `R_G(c_sep, c_comp)` iff the first is `≥ c_sep` and the second `≤ c_comp`.
pub fn region_ratios(g: &RootedTree, gap: &[f64]) -> (f64, f64) {
    let mut sep = f64::INFINITY;
    let mut comp: f64 = 1.0;
    for u in g.internal_vertices() {
        let cuts = g.cuts(u);
        let (lu, ru) = g.nodes()[u].span;
        let cv: Vec<f64> = cuts.iter().map(|&r| gap[r - 1]).collect();
        let cmin = cv.iter().cloned().fold(f64::INFINITY, f64::min);
        let cmax = cv.iter().cloned().fold(0.0, f64::max);
        comp = comp.max(cmax / cmin);
        for l in lu..ru {
            if !cuts.contains(&l) {
                sep = sep.min(cmin / gap[l - 1]);
            }
        }
    }
    (sep, comp)
}

/// Random point of `Δ_n` with log-uniform gaps.
pub fn sample_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let gaps = trees::sample_log_gaps(rng, n.saturating_sub(1));
    let mut xi = Vec::with_capacity(n);
    let mut x = rng.gen_range(-1.0..1.0) * gaps.iter().cloned().fold(1.0, f64::max);
    xi.push(x);
    for g in gaps {
        x += g;
        xi.push(x);
    }
    xi
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportReport {
    pub samples: usize,
    pub nonzero: usize,
    /// Smallest separation ratio seen where the symbol is nonzero.
    pub min_sep_ratio: f64,
    /// Largest comparability ratio seen where the symbol is nonzero.
    pub max_comp_ratio: f64,
}

/// Measured enlargement of `supp m_G` relative to the region constants.
pub fn measure_support(sym: &BuiltSymbol, g: &RootedTree, samples: usize, seed: u64) -> SupportReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = SupportReport { samples, nonzero: 0, min_sep_ratio: f64::INFINITY, max_comp_ratio: 1.0 };
    for _ in 0..samples {
        let xi = sample_simplex(g.leaves(), &mut rng);
        if sym.eval(&xi) != 0.0 {
            rep.nonzero += 1;
            let gap = trees::gaps(&xi).expect("sampled points are increasing");
            let (s, c) = region_ratios(g, &gap);
            rep.min_sep_ratio = rep.min_sep_ratio.min(s);
            rep.max_comp_ratio = rep.max_comp_ratio.max(c);
        }
    }
    rep
}

#[derive(Debug, Clone)]
pub struct Telescope {
    pub n: usize,
    pub trees: Vec<RootedTree>,
    pub m_g: Vec<BuiltSymbol>,
    /// `m^0 = χ_Δn, …, m^N`.
    pub remainders: Vec<Symbol>,
    /// `m_{G_1}, m^1·m_{G_2}, …, m^{N-1}·m_{G_N}`.
    pub summands: Vec<Symbol>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopeCheck {
    pub sum: f64,
    pub chi: f64,
    pub last_remainder: f64,
    /// `|Σ summands + m^N - χ|`.
    pub identity_error: f64,
    /// Largest gap between stored `m^i` and `m^{i-1}(1 - m_{G_i})` from values.
    pub recursion_error: f64,
}

impl Telescope {
    pub fn check(&self, xi: &[f64]) -> TelescopeCheck {
        let mut cache = HashMap::new();
        let chi = eval_cached(&self.remainders[0], xi, &mut cache);
        let mg: Vec<f64> = self.m_g.iter().map(|s| eval_cached(&s.expr, xi, &mut cache)).collect();
        let rem: Vec<f64> = self.remainders.iter().map(|s| eval_cached(s, xi, &mut cache)).collect();
        let sum: f64 = self.summands.iter().map(|s| eval_cached(s, xi, &mut cache)).sum();
        let mut rec = chi;
        let mut recursion_error: f64 = 0.0;
        for (i, m) in mg.iter().enumerate() {
            rec -= rec * m;
            recursion_error = recursion_error.max((rec - rem[i + 1]).abs());
        }
        let last = rem[rem.len() - 1];
        TelescopeCheck {
            sum,
            chi,
            last_remainder: last,
            identity_error: (sum + last - chi).abs(),
            recursion_error,
        }
    }
}

pub fn telescope(n: usize, order: &[usize], rp: &RegionParams, trunc: i64) -> Result<Telescope> {
    telescope_with(n, order, rp, trunc, TELESCOPE_COVERAGE_SAMPLES, TELESCOPE_COVERAGE_SEED)
}

/// `χ_Δn = m_{G_1} + m^1 m_{G_2} + … + m^{N-1} m_{G_N}` with
/// `m^i = m^{i-1} - m^{i-1} m_{G_i}`; refuses unless sampled coverage is complete.
pub fn telescope_with(
    n: usize,
    order: &[usize],
    rp: &RegionParams,
    trunc: i64,
    coverage_samples: usize,
    coverage_seed: u64,
) -> Result<Telescope> {
    if !(2..=MAX_SYMBOL_LEAVES).contains(&n) {
        return Err(Error::NumericGuard(format!("telescope needs 2 <= n <= {MAX_SYMBOL_LEAVES}")));
    }
    let all = trees::enumerate_trees(n)?;
    let mut seen = vec![false; all.len()];
    if order.len() != all.len() || order.iter().any(|&i| i >= all.len() || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::Domain(format!("order must be a permutation of 0..{}", all.len())));
    }
    let cov = coverage_report(n, rp, coverage_samples, coverage_seed)?;
    if cov.uncovered > 0 {
        return Err(Error::Coverage(format!(
            "{} of {} sampled gap vectors lie in no region; examples: {:?}",
            cov.uncovered, cov.samples, cov.uncovered_examples
        )));
    }
    let trees: Vec<RootedTree> = order.iter().map(|&i| all[i].clone()).collect();
    let m_g: Vec<BuiltSymbol> = trees.iter().map(|g| make_m_g(g, rp, trunc)).collect::<Result<_>>()?;
    let mut remainders: Vec<Symbol> = vec![Arc::new(SymbolExpr::Simplex { n })];
    let mut summands = vec![];
    for m in &m_g {
        let prev = remainders.last().expect("non-empty").clone();
        let piece: Symbol = Arc::new(SymbolExpr::Product(vec![prev.clone(), m.expr.clone()]));
        summands.push(piece.clone());
        remainders.push(Arc::new(SymbolExpr::WeightedSum(vec![(1.0, prev), (-1.0, piece)])));
    }
    Ok(Telescope { n, trees, m_g, remainders, summands })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductClosureReport {
    pub candidate: String,
    pub samples: usize,
    pub nonzero: usize,
    pub support_violations: usize,
    /// Largest `|k - k̃|` between root scales with both factors nonzero.
    pub max_scale_mismatch: i32,
    /// Largest `|m_{G1} m_{G2} - m_G|` where the product is nonzero.
    pub max_eval_mismatch: f64,
    pub loose_rp: RegionParams,
}

/// Tree whose root cuts are the union of the root cuts of the (retracted)
/// pair; sons reuse subtrees present in either tree, else stars.
pub fn closure_candidate(g1: &RootedTree, g2: &RootedTree) -> Result<RootedTree> {
    if g1 == g2 {
        return Ok(g1.clone());
    }
    let (r1, r2) = if shares_cut(g1, g2).is_none() { retract_pair(g1, g2)? } else { (g1.clone(), g2.clone()) };
    let n = g1.leaves();
    let mut cuts: Vec<usize> = r1.root_cuts().into_iter().chain(r2.root_cuts()).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut parts = vec![];
    let mut start = 1;
    for c in cuts.iter().copied().chain(std::iter::once(n)) {
        let (l, r) = (start, c);
        start = c + 1;
        let sub = if l == r {
            "x".to_string()
        } else if let Some(v) = r1.vertex_with_span(l, r) {
            r1.subtree(v).to_paren()
        } else if let Some(v) = r2.vertex_with_span(l, r) {
            r2.subtree(v).to_paren()
        } else {
            trees::RootedTree::star(r - l + 1)?.to_paren()
        };
        parts.push((l, sub));
    }
    // relabel leaves of each part to their global positions
    let mut s = String::from("(");
    for (i, (l, sub)) in parts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        if sub == "x" {
            s.push_str(&l.to_string());
        } else {
            let mut out = String::new();
            let mut num = String::new();
            for ch in sub.chars().chain(std::iter::once(' ')) {
                if ch.is_ascii_digit() {
                    num.push(ch);
                } else {
                    if !num.is_empty() {
                        let v: usize = num.parse().expect("digits");
                        out.push_str(&(v + l - 1).to_string());
                        num.clear();
                    }
                    out.push(ch);
                }
            }
            s.push_str(out.trim_end());
        }
    }
    s.push(')');
    RootedTree::from_paren(&s)
}

pub fn product_closure_check(
    g1: &RootedTree,
    g2: &RootedTree,
    rp: &RegionParams,
    trunc: i64,
    samples: usize,
    seed: u64,
) -> Result<ProductClosureReport> {
    let n = g1.leaves();
    if n != g2.leaves() {
        return Err(Error::Precondition("trees have different leaf counts".into()));
    }
    if n > 5 {
        return Err(Error::NumericGuard("product closure limited to n <= 5".into()));
    }
    let candidate = closure_candidate(g1, g2)?;
    let s1 = make_m_g(g1, rp, trunc)?;
    let s2 = make_m_g(g2, rp, trunc)?;
    let sg = make_m_g(&candidate, rp, trunc)?;
    let geom = s1.meta.geometry;
    let (k_sep, k_comp) = tree_scale_constants(n, rp, &geom);
    let loose_rp = RegionParams {
        c_sep: 2f64.powf(k_sep as f64 - geom.window() - 1.0).max(f64::MIN_POSITIVE),
        c_comp: 2f64.powf(k_comp as f64 + geom.window() + 1.0),
        c_dist: rp.c_dist,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ProductClosureReport {
        candidate: candidate.to_paren(),
        samples,
        nonzero: 0,
        support_violations: 0,
        max_scale_mismatch: 0,
        max_eval_mismatch: 0.0,
        loose_rp,
    };
    for _ in 0..samples {
        let xi = sample_simplex(n, &mut rng);
        let p1 = s1.pieces(&xi);
        let p2 = s2.pieces(&xi);
        let prod: f64 = p1.iter().map(|x| x.1).sum::<f64>() * p2.iter().map(|x| x.1).sum::<f64>();
        if prod == 0.0 {
            continue;
        }
        rep.nonzero += 1;
        let gap = trees::gaps(&xi).expect("increasing");
        let (sep, comp) = region_ratios(&candidate, &gap);
        if sep < loose_rp.c_sep || comp > loose_rp.c_comp {
            rep.support_violations += 1;
        }
        for (k, _) in &p1 {
            for (kt, _) in &p2 {
                rep.max_scale_mismatch = rep.max_scale_mismatch.max((k - kt).abs());
            }
        }
        rep.max_eval_mismatch = rep.max_eval_mismatch.max((prod - sg.eval(&xi)).abs());
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::is_adapted;
    use crate::dyadic::QuasiCube;

    fn rp(c_sep: f64, c_comp: f64) -> RegionParams {
        RegionParams::new(c_sep, c_comp, 4.0).unwrap()
    }

    #[test]
    fn partition_intervals_have_expected_left_ends() {
        for k in -3..4 {
            for p in -7..8 {
                let i = partition_interval(k, p);
                let (a, b) = i.endpoints_f64();
                let want = p as f64 * 2f64.powi(k) / 3.0;
                assert!((a - want).abs() < 1e-12 && (b - a - 2f64.powi(k)).abs() < 1e-12);
                let bump = WhitneyGeometry::from_params(&rp(16.0, 4.0), 6).partition_bump(k, p);
                let (lo, hi) = bump.support();
                // support sits inside 7/10 of the interval
                assert!(lo >= a + 0.15 * (b - a) - 1e-12 && hi <= b - 0.15 * (b - a) + 1e-12);
            }
        }
    }

    #[test]
    fn one_dimensional_partition_sums_to_one() {
        let g = WhitneyGeometry::from_params(&rp(16.0, 4.0), 6);
        for k in [-2, 0, 3] {
            for i in 0..200 {
                let y = -5.0 + i as f64 * 0.0517;
                let s: f64 = g.partition_indices(k, y).map(|p| g.partition_bump(k, p).eval(y)).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn term_indices_reproduce_the_pointwise_sum() {
        let g = WhitneyGeometry::from_params(&RegionParams::default(), 6);
        let terms = g.term_indices((-1.0, 1.0), (40.0, 90.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let (y1, y2) = (rng.gen_range(-1.0..1.0), rng.gen_range(40.0..90.0));
            let s: f64 = terms.iter().map(|t| g.first_factor(t, y1) * g.second_factor(t, y2)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(g.term_indices((0.0, 1.0), (0.5, 2.0)).is_err());
    }

    #[test]
    fn halfplane_examples() {
        let r = RegionParams::default();
        for trunc in [0, 4, 8] {
            let h = halfplane_symbol(1.0, 1.0, &r, trunc).unwrap();
            assert!((h.eval(&[0.0, 10.0]) - 1.0).abs() < 1e-6);
            assert_eq!(h.eval(&[10.0, 0.0]), 0.0);
            assert_eq!(h.eval(&[3.0, 3.0]), 0.0);
        }
        assert!(halfplane_symbol(1.0, 1.0, &r, -1).is_err());
    }

    #[test]
    fn halfplane_terms_are_nonnegative_on_adapted_cubes() {
        let r = RegionParams::default();
        let g = WhitneyGeometry::from_params(&r, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let y1 = rng.gen_range(-3.0..3.0);
            let y2 = y1 + rng.gen_range(-6.0f64..4.0).exp();
            for t in halfplane_terms(&g, y1, y2) {
                assert!(t.first >= 0.0 && t.second >= 0.0);
                let (a, b) = t.cube();
                let q = QuasiCube::new(vec![a, b]).unwrap();
                assert!(is_adapted(&q, &[1.0, 1.0], &r).unwrap(), "{t:?}");
            }
        }
    }

    #[test]
    fn m_avec_examples() {
        let r = RegionParams::default();
        let m = make_m_avec(&[1.0, 1.0, 1.0], &r, 8).unwrap();
        assert!((m.eval(&[0.0, 1.0, 2.0]) - 1.0).abs() < 1e-6);
        assert_eq!(m.eval(&[0.0, 1e6, 1e6 + 1.0]), 0.0);
        let m2 = make_m_avec(&[1.0, 2.0], &r, 8).unwrap();
        assert!((m2.eval(&[0.0, 5.0]) - 1.0).abs() < 1e-12);
        assert_eq!(m2.eval(&[2.0, 1.0]), 0.0);
    }

    #[test]
    fn m_g_examples() {
        let r = RegionParams::default();
        let first = RootedTree::from_paren("((1 2) 3)").unwrap();
        let m = make_m_g(&first, &r, 8).unwrap();
        assert!((m.eval(&[0.0, 0.01, 1.0]) - 1.0).abs() < 1e-6);
        assert_eq!(m.eval(&[0.0, 1.0, 1.01]), 0.0);
        let two = RootedTree::from_paren("(1 2)").unwrap();
        let m = make_m_g(&two, &r, 8).unwrap();
        for xi in [[0.0, 1e-3], [-4.0, 9.0]] {
            assert!((m.eval(&xi) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn m_g_is_one_on_its_region() {
        let r = rp(4.0, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 3..=5 {
            for g in trees::enumerate_trees(n).unwrap() {
                let m = make_m_g(&g, &r, 8).unwrap();
                let mut hits = 0;
                for _ in 0..400 {
                    let xi = sample_simplex(n, &mut rng);
                    if trees::region_membership(&g, &xi, &r).unwrap() {
                        hits += 1;
                        assert!((m.eval(&xi) - 1.0).abs() < 1e-12, "{g} at {xi:?}");
                    }
                }
                let _ = hits;
            }
        }
    }

    #[test]
    fn telescope_three_leaves() {
        let r = rp(4.0, 4.0);
        let t = telescope(3, &[0, 1, 2], &r, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let xi = sample_simplex(3, &mut rng);
            let c = t.check(&xi);
            assert!((c.sum - 1.0).abs() < 1e-6);
            assert!(c.identity_error < 1e-12 && c.recursion_error < 1e-12);
        }
        assert!(matches!(telescope(3, &[0, 1, 2], &rp(4.0, 2.0), 8), Err(Error::Coverage(_))));
        assert!(telescope(3, &[0, 0, 1], &r, 8).is_err());
        let t2 = telescope(2, &[0], &r, 8).unwrap();
        assert!((t2.check(&[0.0, 2.0]).sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closure_examples() {
        let r = rp(4.0, 4.0);
        let a = RootedTree::from_paren("(1 (2 3))").unwrap();
        let b = RootedTree::from_paren("((1 2) 3)").unwrap();
        assert_eq!(closure_candidate(&a, &a).unwrap(), a);
        assert_eq!(closure_candidate(&a, &b).unwrap().to_paren(), "(1 2 3)");
        let rep = product_closure_check(&a, &a, &r, 8, 2000, 1).unwrap();
        assert_eq!(rep.support_violations, 0);
        let rep = product_closure_check(&a, &b, &r, 8, 10_000, 1).unwrap();
        assert_eq!(rep.candidate, "(1 2 3)");
        assert_eq!(rep.support_violations, 0);
    }

    #[test]
    fn separated_region_types_multiply_to_zero() {
        let r = rp(256.0, 2.0);
        let first = RootedTree::from_paren("((1 2) 3)").unwrap();
        let third = RootedTree::from_paren("(1 2 3)").unwrap();
        let rep = product_closure_check(&first, &third, &r, 8, 10_000, 9).unwrap();
        assert_eq!(rep.nonzero, 0);
    }
}
