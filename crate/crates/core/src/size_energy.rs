//! Size, John–Nirenberg size and energy of coefficient sequences on rank-1
//! tile collections, the greedy stratification, the size/energy
//! interpolation bound, and Bessel-type sums of wave packets.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{rat, Rat};
use crate::error::{Error, Result};
use crate::experiments::linear_fit;
use crate::grid::{GridFunction, C64};
use crate::tiles::{
    lacunary_family, order_relations, DyadicInterval, HostGrid, LacunaryConfig, Tile, TileCollection, VectorTile,
    WavePacket,
};

/// Largest collection accepted by the combinatorial searches.
pub const MAX_AUDIT_TILES: usize = 512;
const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffSequence {
    pub slot: usize,
    /// One value per vector tile of the collection, in order.
    pub values: Vec<C64>,
}

impl CoeffSequence {
    pub fn new(slot: usize, values: Vec<C64>) -> Self {
        Self { slot, values }
    }

    pub fn zeros(slot: usize, len: usize) -> Self {
        Self { slot, values: vec![C64::new(0.0, 0.0); len] }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { slot: self.slot, values: self.values.iter().map(|v| v * c).collect() }
    }

    fn weight(&self, p: usize) -> f64 {
        self.values[p].norm_sqr()
    }
}

/// An `i`-tree: every member `P` has `P_i ≤ P_{top,i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeWitness {
    pub kind: usize,
    pub top: usize,
    pub members: Vec<usize>,
}

/// Pairwise order data of a collection. Frequency endpoints are stored
/// multiplied by 3, which makes every endpoint and every dilation used here a
/// dyadic rational, so the `f64` comparisons are exact.
#[derive(Debug, Clone)]
pub struct TileGeometry {
    d: usize,
    m: usize,
    le: Vec<Vec<bool>>,
    overlap2: Vec<Vec<bool>>,
    same: Vec<Vec<bool>>,
    time: Vec<DyadicInterval>,
    len: Vec<f64>,
}

fn scaled_freq(t: &VectorTile, i: usize) -> (f64, f64) {
    let f = &t.freqs[i];
    let a = if f.j.rem_euclid(2) == 0 { f.alpha_index as f64 } else { -(f.alpha_index as f64) };
    let lo = 2f64.powi(f.j) * (3.0 * f.k as f64 + a);
    (lo, lo + 3.0 * 2f64.powi(f.j))
}

fn dilate((a, b): (f64, f64), c: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let r = 0.5 * (b - a) * c;
    (mid - r, mid + r)
}

fn times_meet(a: &DyadicInterval, b: &DyadicInterval) -> bool {
    a.is_subset(b) || b.is_subset(a)
}

impl TileGeometry {
    pub fn new(coll: &TileCollection) -> Result<Self> {
        let m = coll.len();
        if m > MAX_AUDIT_TILES {
            return Err(Error::NumericGuard(format!("{m} tiles exceed the budget of {MAX_AUDIT_TILES}")));
        }
        let d = coll.dim().unwrap_or(0);
        let mut le = vec![vec![false; m * m]; d];
        let mut overlap2 = vec![vec![false; m * m]; d];
        let mut same = vec![vec![false; m * m]; d];
        for i in 0..d {
            let f: Vec<(f64, f64)> = coll.tiles.iter().map(|t| scaled_freq(t, i)).collect();
            let three: Vec<(f64, f64)> = f.iter().map(|&w| dilate(w, 3.0)).collect();
            let two: Vec<(f64, f64)> = f.iter().map(|&w| dilate(w, 2.0)).collect();
            for p in 0..m {
                for t in 0..m {
                    let (tp, tt) = (&coll.tiles[p].time, &coll.tiles[t].time);
                    let eq = tp == tt && f[p] == f[t];
                    let lt = tp != tt && tp.is_subset(tt) && three[p].0 <= three[t].0 && three[t].1 <= three[p].1;
                    le[i][p * m + t] = eq || lt;
                    same[i][p * m + t] = eq;
                    overlap2[i][p * m + t] = two[p].0.max(two[t].0) < two[p].1.min(two[t].1);
                }
            }
        }
        let time: Vec<DyadicInterval> = coll.tiles.iter().map(|t| t.time).collect();
        let len = time.iter().map(|t| t.length()).collect();
        Ok(Self { d, m, le, overlap2, same, time, len })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    fn kinds(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).filter(move |&i| i != slot)
    }

    /// `P_i ≤ T_i`.
    pub fn below(&self, i: usize, p: usize, t: usize) -> bool {
        self.le[i][p * self.m + t]
    }

    fn check_seq(&self, seq: &CoeffSequence) -> Result<()> {
        if seq.values.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: seq.values.len() });
        }
        if seq.slot >= self.d {
            return Err(Error::Domain(format!("slot {} out of range for dimension {}", seq.slot, self.d)));
        }
        if self.d < 2 {
            return Err(Error::Domain("size needs trees of a type other than the slot".into()));
        }
        Ok(())
    }

    /// Largest `|I_T|^{-1} Σ_{P∈T} |a_P|²` over maximal trees inside `subset`,
    /// tops ranging over the whole collection.
    fn best_tree(&self, seq: &CoeffSequence, subset: &[bool]) -> (f64, Option<TreeWitness>) {
        let mut best = (0.0, None);
        for i in self.kinds(seq.slot) {
            for t in 0..self.m {
                let w: f64 = (0..self.m).filter(|&p| subset[p] && self.below(i, p, t)).map(|p| seq.weight(p)).sum();
                let v = w / self.len[t];
                if v > best.0 {
                    let members = (0..self.m).filter(|&p| subset[p] && self.below(i, p, t)).collect();
                    best = (v, Some(TreeWitness { kind: i, top: t, members }));
                }
            }
        }
        best
    }

    pub fn size(&self, seq: &CoeffSequence, subset: &[bool]) -> Result<SizeReport> {
        self.check_seq(seq)?;
        if !subset.iter().any(|&b| b) {
            return Err(Error::Domain("size of an empty collection".into()));
        }
        let (v, witness) = self.best_tree(seq, subset);
        Ok(SizeReport { value: v.sqrt(), witness })
    }

    /// `|I_T|^{-1} ‖(Σ_{P∈T} |a_P|²/|I_P| χ_{I_P})^{1/2}‖_{1,∞}` for one tree,
    /// exact on the step function.
    fn jn_of(&self, seq: &CoeffSequence, members: &[usize], top: usize) -> f64 {
        let mut cuts: Vec<(i64, i32)> = vec![];
        let jmin = members.iter().map(|&p| self.time[p].j).min().unwrap_or(0);
        for &p in members {
            let t = self.time[p];
            let s = 1i64 << (t.j - jmin);
            cuts.push((t.k * s, 0));
            cuts.push(((t.k + 1) * s, 0));
        }
        cuts.sort_unstable();
        cuts.dedup();
        let unit = 2f64.powi(jmin);
        let mut pieces: Vec<(f64, f64)> = vec![];
        for w in cuts.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            let g2: f64 = members
                .iter()
                .filter(|&&p| {
                    let t = self.time[p];
                    let s = 1i64 << (t.j - jmin);
                    t.k * s <= a && b <= (t.k + 1) * s
                })
                .map(|&p| seq.weight(p) / self.len[p])
                .sum();
            if g2 > 0.0 {
                pieces.push((g2.sqrt(), (b - a) as f64 * unit));
            }
        }
        pieces.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut measure = 0.0;
        let mut best: f64 = 0.0;
        for (v, l) in pieces {
            measure += l;
            best = best.max(v * measure);
        }
        best / self.len[top]
    }

    pub fn size_jn(&self, seq: &CoeffSequence, subset: &[bool]) -> Result<f64> {
        self.check_seq(seq)?;
        if !subset.iter().any(|&b| b) {
            return Err(Error::Domain("size of an empty collection".into()));
        }
        let mut best: f64 = 0.0;
        for i in self.kinds(seq.slot) {
            for t in 0..self.m {
                let members: Vec<usize> = (0..self.m).filter(|&p| subset[p] && self.below(i, p, t)).collect();
                if !members.is_empty() {
                    best = best.max(self.jn_of(seq, &members, t));
                }
            }
        }
        Ok(best)
    }

    /// Largest mean square over subtrees of `members` (any type other than
    /// the slot, any top in the collection).
    fn max_subtree(&self, seq: &CoeffSequence, members: &[usize]) -> f64 {
        let mut best: f64 = 0.0;
        for i in self.kinds(seq.slot) {
            for t in 0..self.m {
                let w: f64 = members.iter().filter(|&&p| self.below(i, p, t)).map(|&p| seq.weight(p)).sum();
                best = best.max(w / self.len[t]);
            }
        }
        best
    }

    /// Greedy family of strongly disjoint trees at level `n`.
    fn greedy_level(&self, seq: &CoeffSequence, n: i32) -> Vec<TreeWitness> {
        let j = seq.slot;
        let lo = 4f64.powi(n);
        let hi = 4f64.powi(n + 1) * (1.0 + REL_TOL);
        let mut used = vec![false; self.m];
        // tiles that can join no later tree, and times later tops must avoid
        let mut dead = vec![false; self.m];
        let mut avoid: Vec<Vec<DyadicInterval>> = vec![vec![]; self.m];
        let mut chosen: Vec<TreeWitness> = vec![];
        loop {
            let mut cands = vec![];
            for i in self.kinds(j) {
                for t in 0..self.m {
                    let members: Vec<usize> = (0..self.m)
                        .filter(|&p| {
                            !used[p]
                                && !dead[p]
                                && self.below(i, p, t)
                                && avoid[p].iter().all(|a| !times_meet(a, &self.time[t]))
                        })
                        .collect();
                    let w: f64 = members.iter().map(|&p| seq.weight(p)).sum();
                    if w > 0.0 && w / self.len[t] >= lo {
                        cands.push((self.len[t], w, TreeWitness { kind: i, top: t, members }));
                    }
                }
            }
            cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
            let Some((_, _, tree)) = cands.into_iter().find(|c| self.max_subtree(seq, &c.2.members) <= hi) else {
                break;
            };
            let top_time = self.time[tree.top];
            for &q in &tree.members {
                used[q] = true;
            }
            for p in 0..self.m {
                for &q in &tree.members {
                    if self.same[j][p * self.m + q] {
                        dead[p] = true;
                    }
                    if self.overlap2[j][p * self.m + q] {
                        if times_meet(&self.time[p], &top_time) {
                            dead[p] = true;
                        }
                        avoid[p].push(self.time[q]);
                    }
                }
            }
            chosen.push(tree);
        }
        chosen
    }

    pub fn energy(&self, seq: &CoeffSequence) -> Result<EnergyReport> {
        self.check_seq(seq)?;
        let all = vec![true; self.m];
        let s = self.size(seq, &all)?.value;
        let amin = (0..self.m)
            .filter(|&p| seq.weight(p) > 0.0)
            .map(|p| seq.values[p].norm())
            .fold(f64::INFINITY, f64::min);
        if s == 0.0 || !amin.is_finite() {
            return Ok(EnergyReport { slot: seq.slot, value: 0.0, level: None, trees: vec![], interior: true, scanned: (0, 0) });
        }
        let lmax = self.len.iter().cloned().fold(0.0, f64::max);
        let n_hi = s.log2().ceil() as i32 + 1;
        let n_lo = (amin / lmax.sqrt()).log2().floor() as i32 - 1;
        let mut best = EnergyReport { slot: seq.slot, value: 0.0, level: None, trees: vec![], interior: true, scanned: (n_lo, n_hi) };
        for n in (n_lo..=n_hi).rev() {
            let trees = self.greedy_level(seq, n);
            let total: f64 = trees.iter().map(|t| self.len[t.top]).sum();
            let v = 2f64.powi(n) * total.sqrt();
            if v > best.value {
                best.value = v;
                best.level = Some(n);
                best.trees = trees;
            }
        }
        best.interior = best.level.is_some_and(|n| n > n_lo && n < n_hi);
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub value: f64,
    pub witness: Option<TreeWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub slot: usize,
    pub value: f64,
    pub level: Option<i32>,
    pub trees: Vec<TreeWitness>,
    /// Best level strictly inside the scanned range.
    pub interior: bool,
    pub scanned: (i32, i32),
}

fn nonempty(coll: &TileCollection) -> Result<()> {
    if coll.is_empty() {
        return Err(Error::Domain("empty tile collection".into()));
    }
    Ok(())
}

pub fn size(coll: &TileCollection, seq: &CoeffSequence) -> Result<SizeReport> {
    nonempty(coll)?;
    TileGeometry::new(coll)?.size(seq, &vec![true; coll.len()])
}

pub fn size_jn(coll: &TileCollection, seq: &CoeffSequence) -> Result<f64> {
    nonempty(coll)?;
    TileGeometry::new(coll)?.size_jn(seq, &vec![true; coll.len()])
}

pub fn energy(coll: &TileCollection, seq: &CoeffSequence) -> Result<EnergyReport> {
    nonempty(coll)?;
    TileGeometry::new(coll)?.energy(seq)
}

fn rat_interval(t: &VectorTile, i: usize, c: i64) -> (Rat, Rat) {
    let (a, b) = t.freqs[i].endpoints();
    let mid = (&a + &b) * rat(1, 2);
    let r = (b - a) * rat(c, 2);
    (&mid - &r, &mid + &r)
}

fn le_exact(coll: &TileCollection, i: usize, p: usize, t: usize) -> Result<bool> {
    Ok(order_relations(&coll.tiles[p].component(i), &coll.tiles[t].component(i), 3.0)?.le)
}

/// Independent re-check of an energy certificate with exact rational geometry.
pub fn verify_energy(coll: &TileCollection, seq: &CoeffSequence, rep: &EnergyReport) -> Result<()> {
    let Some(n) = rep.level else {
        return if rep.value == 0.0 && rep.trees.is_empty() {
            Ok(())
        } else {
            Err(Error::Precondition("certificate without level carries trees".into()))
        };
    };
    let j = seq.slot;
    let d = coll.dim().unwrap_or(0);
    let m = coll.len();
    let w = |p: usize| seq.values[p].norm_sqr();
    let len = |p: usize| coll.tiles[p].time.length();
    let mut seen = vec![false; m];
    for tree in &rep.trees {
        if tree.kind == j || tree.kind >= d {
            return Err(Error::Precondition(format!("tree of type {} for slot {j}", tree.kind)));
        }
        for &p in &tree.members {
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Precondition(format!("tile {p} in two trees")));
            }
            if !le_exact(coll, tree.kind, p, tree.top)? {
                return Err(Error::Precondition(format!("tile {p} not below top {}", tree.top)));
            }
        }
        let total: f64 = tree.members.iter().map(|&p| w(p)).sum();
        if total / len(tree.top) < 4f64.powi(n) * (1.0 - REL_TOL) {
            return Err(Error::Precondition(format!("tree at top {} below level {n}", tree.top)));
        }
        for i in (0..d).filter(|&i| i != j) {
            for t in 0..m {
                let mut sub = 0.0;
                for &p in &tree.members {
                    if le_exact(coll, i, p, t)? {
                        sub += w(p);
                    }
                }
                if sub / len(t) > 4f64.powi(n + 1) * (1.0 + REL_TOL) {
                    return Err(Error::Precondition(format!("subtree at top {t} exceeds level {}", n + 1)));
                }
            }
        }
    }
    for (a, ta) in rep.trees.iter().enumerate() {
        for tb in &rep.trees[a + 1..] {
            for &p in &ta.members {
                for &q in &tb.members {
                    let (pp, qq) = (&coll.tiles[p], &coll.tiles[q]);
                    if pp.component(j) == qq.component(j) {
                        return Err(Error::Precondition(format!("tiles {p} and {q} share a component")));
                    }
                    let (x, y) = (rat_interval(pp, j, 2), rat_interval(qq, j, 2));
                    let meet = x.0.clone().max(y.0.clone()) < x.1.clone().min(y.1.clone());
                    if meet
                        && (times_meet(&qq.time, &coll.tiles[ta.top].time)
                            || times_meet(&pp.time, &coll.tiles[tb.top].time))
                    {
                        return Err(Error::Precondition(format!("tiles {p} and {q} break strong disjointness")));
                    }
                }
            }
        }
    }
    let total: f64 = rep.trees.iter().map(|t| len(t.top)).sum();
    let v = 2f64.powi(n) * total.sqrt();
    if (v - rep.value).abs() > REL_TOL * v.max(1.0) {
        return Err(Error::Precondition(format!("certificate value {} but trees give {v}", rep.value)));
    }
    Ok(())
}

/// Packet coefficients `⟨f, Φ_{P_slot}⟩`.
pub fn packet_coefficients(coll: &TileCollection, f: &GridFunction, slot: usize, order: u32) -> Result<CoeffSequence> {
    let host = HostGrid { n: f.n(), period: f.period() };
    let values = coll
        .tiles
        .iter()
        .map(|t| f.inner(&WavePacket::new(&t.component(slot), order, &host, 0.0)?.samples))
        .collect::<Result<_>>()?;
    Ok(CoeffSequence::new(slot, values))
}

/// `energy(⟨f, Φ_{P_slot}⟩) / ‖f‖₂`.
pub fn energy_l2_check(coll: &TileCollection, f: &GridFunction, slot: usize, order: u32) -> Result<f64> {
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(energy(coll, &packet_coefficients(coll, f, slot, order)?)?.value / norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub n: i32,
    pub trees: Vec<TreeWitness>,
    /// `min(2^{-n} E, S)`.
    pub size_bound: f64,
    pub tree_length_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratification {
    pub slot: usize,
    pub energy: f64,
    pub size: f64,
    pub strata: Vec<Stratum>,
    /// Tiles never extracted; all carry zero coefficients.
    pub residual: Vec<usize>,
    /// `max_n Σ|I_T| / 2^{2n}`.
    pub c_strat: f64,
}

/// Repeated tree extraction: at level `n` the remaining collection has size at
/// most `2^{-n} E`; maximal trees are removed until it drops to `2^{-n-1} E`.
pub fn stratify(coll: &TileCollection, seq: &CoeffSequence) -> Result<Stratification> {
    nonempty(coll)?;
    let g = TileGeometry::new(coll)?;
    let m = g.len();
    let e = g.energy(seq)?.value;
    let all = vec![true; m];
    let s = g.size(seq, &all)?.value;
    if s == 0.0 {
        return Ok(Stratification {
            slot: seq.slot,
            energy: e,
            size: 0.0,
            strata: vec![Stratum { n: 0, trees: vec![], size_bound: 0.0, tree_length_sum: 0.0 }],
            residual: (0..m).collect(),
            c_strat: 0.0,
        });
    }
    let mut remaining = all;
    let mut n = (e / s).log2().floor() as i32;
    let mut strata = vec![];
    let mut c_strat: f64 = 0.0;
    while (0..m).any(|p| remaining[p] && seq.weight(p) > 0.0) {
        let target = 2f64.powi(-n - 1) * e;
        let mut trees = vec![];
        loop {
            let (v, w) = g.best_tree(seq, &remaining);
            if v.sqrt() <= target {
                break;
            }
            let tree = w.expect("positive size has a witness");
            for &p in &tree.members {
                remaining[p] = false;
            }
            trees.push(tree);
        }
        let total: f64 = trees.iter().map(|t| g.len[t.top]).sum();
        c_strat = c_strat.max(total / 4f64.powi(n));
        strata.push(Stratum { n, trees, size_bound: (2f64.powi(-n) * e).min(s), tree_length_sum: total });
        n += 1;
    }
    Ok(Stratification {
        slot: seq.slot,
        energy: e,
        size: s,
        strata,
        residual: (0..m).filter(|&p| remaining[p]).collect(),
        c_strat,
    })
}

/// Re-verifies the postconditions of a stratification from the object alone.
pub fn verify_stratification(coll: &TileCollection, seq: &CoeffSequence, st: &Stratification) -> Result<()> {
    let g = TileGeometry::new(coll)?;
    let m = g.len();
    let mut owner = vec![0usize; m];
    for (k, s) in st.strata.iter().enumerate() {
        let mut subset = vec![false; m];
        let mut total = 0.0;
        for t in &s.trees {
            total += g.len[t.top];
            for &p in &t.members {
                if !g.below(t.kind, p, t.top) {
                    return Err(Error::Precondition(format!("tile {p} not below its top in stratum {}", s.n)));
                }
                owner[p] += 1;
                subset[p] = true;
            }
        }
        if k > 0 && s.n != st.strata[k - 1].n + 1 {
            return Err(Error::Precondition("strata levels not consecutive".into()));
        }
        if subset.iter().any(|&b| b) {
            let sz = g.size(seq, &subset)?.value;
            if sz > s.size_bound * (1.0 + REL_TOL) {
                return Err(Error::Precondition(format!("stratum {} has size {sz} > {}", s.n, s.size_bound)));
            }
        }
        if (total - s.tree_length_sum).abs() > REL_TOL * total.max(1.0) || total > st.c_strat * 4f64.powi(s.n) * (1.0 + REL_TOL) {
            return Err(Error::Precondition(format!("stratum {} tree lengths inconsistent", s.n)));
        }
    }
    for &p in &st.residual {
        owner[p] += 1;
        if seq.weight(p) > 0.0 {
            return Err(Error::Precondition(format!("residual tile {p} carries a nonzero coefficient")));
        }
    }
    if let Some(p) = owner.iter().position(|&c| c != 1) {
        return Err(Error::Precondition(format!("tile {p} covered {} times", owner[p])));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToolReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `|Σ_P |I_P|^{-(d-2)/2} Π_j a^j_P|` against `Π_j S_j^{θ_j} E_j^{1-θ_j}`.
pub fn tool_check(coll: &TileCollection, seqs: &[CoeffSequence], thetas: &[f64]) -> Result<ToolReport> {
    nonempty(coll)?;
    let d = coll.dim().unwrap_or(0);
    if d < 3 {
        return Err(Error::Domain(format!("dimension {d} below 3")));
    }
    if seqs.len() != d || thetas.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: seqs.len().min(thetas.len()) });
    }
    if thetas.iter().any(|&t| !(0.0..1.0).contains(&t)) || (thetas.iter().sum::<f64>() - (d as f64 - 2.0)).abs() > 1e-12 {
        return Err(Error::Precondition(format!("exponents {thetas:?} must lie in [0,1) and sum to {}", d - 2)));
    }
    if seqs.iter().enumerate().any(|(j, s)| s.slot != j) {
        return Err(Error::Domain("sequence j must sit in slot j".into()));
    }
    let g = TileGeometry::new(coll)?;
    let all = vec![true; g.len()];
    let lhs = (0..g.len())
        .map(|p| seqs.iter().map(|s| s.values[p]).product::<C64>() * g.len[p].powf(-(d as f64 - 2.0) / 2.0))
        .sum::<C64>()
        .norm();
    let mut rhs = 1.0;
    for (s, &th) in seqs.iter().zip(thetas) {
        let sz = g.size(s, &all)?.value;
        let en = g.energy(s)?.value;
        rhs *= sz.powf(th) * en.powf(1.0 - th);
    }
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(ToolReport { lhs, rhs, ratio })
}

/// Coefficients `c` with `Σ_{P∈T'} |c_P|² ≤ |I_{T'}| / Σ_T |I_T|` on every
/// subtree of a family of trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpSequence {
    pub seq: CoeffSequence,
    pub trees: Vec<TreeWitness>,
}

/// `max Σ_{P∈T'} |c_P|² Σ_T|I_T| / |I_{T'}|` over subtrees; at most one when
/// the normalization holds.
pub fn cp_excess(coll: &TileCollection, cp: &CpSequence) -> Result<f64> {
    let g = TileGeometry::new(coll)?;
    g.check_seq(&cp.seq)?;
    let total: f64 = cp.trees.iter().map(|t| g.len[t.top]).sum();
    let mut in_tree = vec![false; g.len()];
    let mut worst: f64 = 0.0;
    for t in &cp.trees {
        for &p in &t.members {
            in_tree[p] = true;
        }
        worst = worst.max(g.max_subtree(&cp.seq, &t.members) * total);
    }
    if (0..g.len()).any(|p| !in_tree[p] && cp.seq.weight(p) > 0.0) {
        return Err(Error::Precondition("coefficient outside the tree family".into()));
    }
    Ok(worst)
}

/// Uniform rescaling of `raw` onto the normalization of [`CpSequence`].
pub fn cp_normalize(coll: &TileCollection, raw: &CoeffSequence, trees: Vec<TreeWitness>) -> Result<CpSequence> {
    let mut keep = vec![false; coll.len()];
    for t in &trees {
        for &p in &t.members {
            keep[p] = true;
        }
    }
    let masked = CoeffSequence::new(
        raw.slot,
        raw.values.iter().zip(&keep).map(|(v, &k)| if k { *v } else { C64::new(0.0, 0.0) }).collect(),
    );
    let cp = CpSequence { seq: masked, trees };
    let ex = cp_excess(coll, &cp)?;
    if ex == 0.0 {
        return Ok(cp);
    }
    Ok(CpSequence { seq: cp.seq.scale(1.0 / ex.sqrt()), trees: cp.trees })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PacketKind {
    Standard { order: u32 },
    /// `(1 + ((x - c_I)/|I|)²)^{-5} e^{2πi ξ_ω x}`, periodized and L²-normalized.
    Relaxed,
}

/// `∫ (1 + u²)^{-10} du`.
fn relaxed_l2_squared() -> f64 {
    // √π Γ(19/2) / Γ(10)
    let g = (1..=9).fold(PI.sqrt(), |acc, k| acc * (k as f64 - 0.5)) / (1..=9).product::<u64>() as f64;
    PI.sqrt() * g
}

/// Periodic images summed on each side; the truncation error is below
/// `(4·RELAXED_IMAGES)^{-10}` relative.
const RELAXED_IMAGES: i32 = 8;

pub fn relaxed_packet(tile: &Tile, host: &HostGrid) -> Result<GridFunction> {
    let len = tile.time.length();
    let (a, b) = tile.freq.endpoints_f64();
    let xi = 0.5 * (a + b);
    let nyq = host.n as f64 / (2.0 * host.period);
    if len < crate::tiles::MIN_CELLS as f64 * host.step() || xi.abs() >= nyq {
        return Err(Error::Resolution(format!("tile {tile:?} not resolved on the host grid")));
    }
    let c = tile.time.center();
    let p = host.period;
    let norm = (len * relaxed_l2_squared()).sqrt();
    GridFunction::from_fn(host.n, p, |x| {
        let bump: f64 = (-RELAXED_IMAGES..=RELAXED_IMAGES)
            .map(|k| {
                let u = (x - c - k as f64 * p) / len;
                (1.0 + u * u).powi(-5)
            })
            .sum();
        C64::from_polar(bump / norm, 2.0 * PI * xi * x)
    })
}

fn packet(tile: &Tile, kind: PacketKind, host: &HostGrid) -> Result<GridFunction> {
    match kind {
        PacketKind::Standard { order } => Ok(WavePacket::new(tile, order, host, 0.0)?.samples),
        PacketKind::Relaxed => relaxed_packet(tile, host),
    }
}

/// `Σ_{|I_P| ≤ |I_Q|} c_P c_Q ⟨Φ_{P_i}, Φ_{Q_j}⟩` with `i`, `j` the slots of the
/// two sequences.
pub fn bessel_sum(
    coll_p: &TileCollection,
    coll_q: &TileCollection,
    cp: &CpSequence,
    cq: &CpSequence,
    host: &HostGrid,
    kind: PacketKind,
) -> Result<C64> {
    for (coll, c) in [(coll_p, cp), (coll_q, cq)] {
        let ex = cp_excess(coll, c)?;
        if ex > 1.0 + 1e-9 {
            return Err(Error::Precondition(format!("normalization exceeded by factor {ex}")));
        }
    }
    let (i, j) = (cp.seq.slot, cq.seq.slot);
    let active = |coll: &TileCollection, c: &CpSequence, slot: usize| -> Result<Vec<(f64, C64, GridFunction)>> {
        coll.tiles
            .iter()
            .zip(&c.seq.values)
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(t, v)| Ok((t.time.length(), *v, packet(&t.component(slot), kind, host)?)))
            .collect()
    };
    let ps = active(coll_p, cp, i)?;
    let qs = active(coll_q, cq, j)?;
    let mut sum = C64::new(0.0, 0.0);
    for (lp, vp, fp) in &ps {
        for (lq, vq, fq) in &qs {
            if lp <= lq {
                sum += vp * vq * fp.inner(fq)?;
            }
        }
    }
    Ok(sum)
}

/// Ratio of `|⟨Φ̃_{Q₁}, Φ̃_{Q₂}⟩|` to
/// `(1 + dist(ω₁,ω₂)/|ω₂|)^{-10} (1 + dist(I₁,I₂)/|I₁|)^{-10} |I₂|^{...}` for relaxed
/// L²-normalized packets with `|I_{Q₁}| ≥ |I_{Q₂}|`, where the last factor is
/// `(|I₂|/|I₁|)^{1/2}` after normalization.
pub fn scalar_product_ratio(q1: &Tile, q2: &Tile, host: &HostGrid) -> Result<f64> {
    if q1.time.j < q2.time.j {
        return Err(Error::Precondition("need |I_Q1| >= |I_Q2|".into()));
    }
    let v = relaxed_packet(q1, host)?.inner(&relaxed_packet(q2, host)?)?.norm();
    let (a1, b1) = q1.freq.endpoints_f64();
    let (a2, b2) = q2.freq.endpoints_f64();
    let dw = (a1.max(a2) - b1.min(b2)).max(0.0);
    let (l1, l2) = (q1.time.length(), q2.time.length());
    let (c1, c2) = (q1.time.center(), q2.time.center());
    let p = host.period;
    let dc = ((c1 - c2 + p / 2.0).rem_euclid(p) - p / 2.0).abs();
    let di = (dc - 0.5 * (l1 + l2)).max(0.0);
    let bound = (1.0 + dw / (b2 - a2)).powi(-10) * (1.0 + di / l1).powi(-10) * (l2 / l1).sqrt();
    Ok(v / bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelicateConfig {
    pub k1: i32,
    pub k2: Vec<i32>,
    pub trials: usize,
    pub seed: u64,
    pub kind: PacketKind,
}

impl Default for DelicateConfig {
    fn default() -> Self {
        Self { k1: 1, k2: (4..=9).collect(), trials: 8, seed: 7, kind: PacketKind::Standard { order: 6 } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelicateReport {
    pub rows: Vec<(i32, f64)>,
    /// Least-squares slope of `log₂ |sum|` against `k₂`; `-∞` when all sums vanish.
    pub slope: f64,
}

/// One-tile trees on both sides of a point `x₀ = S_P = S_Q`: `P` tiles of
/// length 1 at distance `2^{k₁}` from `x₀`, `Q` tiles of length 2 at distance
/// `2^{k₂+1}`, slot frequencies `[0,1)` and `[0,1/2)`.
pub fn separated_collections(k1: i32, k2: i32, period: f64) -> Result<(TileCollection, TileCollection)> {
    let x0 = (period / 2.0) as i64;
    let vt = |j: i32, k: i64| -> Result<VectorTile> {
        let freqs = (0..3).map(|i| crate::dyadic::ShiftedDyadicInterval::new(-j, (4 * i) << j, 0)).collect::<Result<_>>()?;
        VectorTile::new(DyadicInterval::new(j, k), freqs)
    };
    let dp = 1i64 << k1;
    let p = vec![vt(0, x0 + dp)?, vt(0, x0 - dp - 1)?];
    let dq = 1i64 << k2;
    let q = vec![vt(1, x0 / 2 + dq)?, vt(1, x0 / 2 - dq - 1)?];
    Ok((TileCollection::new(p, 32.0)?, TileCollection::new(q, 32.0)?))
}

pub fn delicate_decay_probe(cfg: &DelicateConfig) -> Result<DelicateReport> {
    if cfg.k2.iter().any(|&k| k < cfg.k1 + 2) {
        return Err(Error::Precondition(format!("need k2 >= k1 + 2, got k1 = {} and {:?}", cfg.k1, cfg.k2)));
    }
    if cfg.k1 < 1 || cfg.trials == 0 {
        return Err(Error::Domain("need k1 >= 1 and at least one trial".into()));
    }
    let kmax = cfg.k2.iter().copied().max().unwrap_or(cfg.k1 + 2);
    let period = 2f64.powi(kmax + 4);
    let host = HostGrid { n: (16.0 * period) as usize, period };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = vec![];
    for &k2 in &cfg.k2 {
        let (cp_coll, cq_coll) = separated_collections(cfg.k1, k2, period)?;
        let mut acc = 0.0;
        for _ in 0..cfg.trials {
            let mut phases = |coll: &TileCollection| {
                let trees: Vec<TreeWitness> =
                    (0..coll.len()).map(|p| TreeWitness { kind: 1, top: p, members: vec![p] }).collect();
                let raw = CoeffSequence::new(
                    0,
                    (0..coll.len()).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI))).collect(),
                );
                cp_normalize(coll, &raw, trees)
            };
            let cp = phases(&cp_coll)?;
            let cq = phases(&cq_coll)?;
            acc += bessel_sum(&cp_coll, &cq_coll, &cp, &cq, &host, cfg.kind)?.norm();
        }
        rows.push((k2, acc / cfg.trials as f64));
    }
    if rows.iter().all(|r| r.1 == 0.0) {
        return Ok(DelicateReport { rows, slope: f64::NEG_INFINITY });
    }
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.1 > 0.0).map(|r| (r.0 as f64, r.1.log2())).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Ok(DelicateReport { rows, slope: linear_fit(&xs, &ys)?.slope })
}

/// Random rank-1 instance: `tiles` vector tiles drawn from the lacunary
/// family, one sequence per slot with `a_P = |I_P|^{1/2}(u + iv)`, `u, v`
/// uniform in `[-1, 1]`.
pub fn random_instance(rng: &mut ChaCha8Rng, tiles: usize) -> Result<(TileCollection, Vec<CoeffSequence>)> {
    let fam = lacunary_family(&LacunaryConfig::default())?;
    if tiles == 0 || tiles > fam.len() {
        return Err(Error::Domain(format!("instance size {tiles} not in 1..={}", fam.len())));
    }
    let mut idx: Vec<usize> = (0..fam.len()).collect();
    for i in 0..tiles {
        let k = rng.gen_range(i..idx.len());
        idx.swap(i, k);
    }
    let mut chosen: Vec<usize> = idx[..tiles].to_vec();
    chosen.sort_unstable();
    let coll = TileCollection::new(chosen.iter().map(|&i| fam.tiles[i].clone()).collect(), fam.rank1_constant)?;
    let d = coll.dim().unwrap_or(0);
    let seqs = (0..d)
        .map(|j| {
            CoeffSequence::new(
                j,
                coll.tiles
                    .iter()
                    .map(|t| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * t.time.length().sqrt())
                    .collect(),
            )
        })
        .collect();
    Ok((coll, seqs))
}
