//! Ordered rooted trees with `n` labelled leaves in which every internal vertex
//! has at least two sons, and the simplex regions `R_G` they index.
//!
//! Vertices are numbered in level order (breadth first, sons left to right), so
//! vertex `0` is the root. Gap `l` (1-based) is `ξ_{l+1} - ξ_l`.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::RegionParams;
use crate::error::{Error, Result};

pub const MAX_ENUM_LEAVES: usize = 8;
pub const MAX_COVERAGE_LEAVES: usize = 6;

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub children: Vec<VertexId>,
    pub parent: Option<VertexId>,
    pub level: usize,
    /// `(l_u, r_u)`, 1-based leaf labels.
    pub span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Shape {
    Leaf,
    Node(Vec<Shape>),
}

impl Shape {
    fn leaves(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(c) => c.iter().map(Shape::leaves).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    nodes: Vec<Node>,
    n: usize,
}

impl RootedTree {
    fn from_shape(shape: &Shape) -> Self {
        let mut nodes: Vec<Node> = Vec::new();
        let mut queue: std::collections::VecDeque<(&Shape, Option<VertexId>, usize, usize)> =
            std::collections::VecDeque::new();
        queue.push_back((shape, None, 0, 1));
        while let Some((s, parent, level, first_leaf)) = queue.pop_front() {
            let id = nodes.len();
            let span = (first_leaf, first_leaf + s.leaves() - 1);
            nodes.push(Node { children: Vec::new(), parent, level, span });
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            if let Shape::Node(children) = s {
                let mut start = first_leaf;
                for c in children {
                    queue.push_back((c, Some(id), level + 1, start));
                    start += c.leaves();
                }
            }
        }
        Self { n: shape.leaves(), nodes }
    }

    fn shape_at(&self, v: VertexId) -> Shape {
        if self.nodes[v].children.is_empty() {
            Shape::Leaf
        } else {
            Shape::Node(self.nodes[v].children.iter().map(|&c| self.shape_at(c)).collect())
        }
    }

    /// Star tree: one root whose sons are all `n` leaves.
    pub fn star(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("a tree needs at least one leaf".into()));
        }
        if n == 1 {
            return Ok(Self::from_shape(&Shape::Leaf));
        }
        Ok(Self::from_shape(&Shape::Node(vec![Shape::Leaf; n])))
    }

    pub fn leaves(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, v: VertexId) -> Result<&Node> {
        self.nodes
            .get(v)
            .ok_or_else(|| Error::Domain(format!("vertex {v} not in tree")))
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.nodes[v].children.is_empty()
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.nodes[v].children
    }

    /// Non-leaf vertices in level order.
    pub fn internal_vertices(&self) -> Vec<VertexId> {
        (0..self.nodes.len()).filter(|&v| !self.is_leaf(v)).collect()
    }

    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn index_interval(&self, v: VertexId) -> Result<(usize, usize)> {
        Ok(self.node(v)?.span)
    }

    /// Vertex whose leaf run is exactly `(l, r)`, if any.
    pub fn vertex_with_span(&self, l: usize, r: usize) -> Option<VertexId> {
        self.nodes.iter().position(|n| n.span == (l, r))
    }

    /// Right endpoints `r_{u_i}` of all sons but the last.
    pub fn cuts(&self, v: VertexId) -> Vec<usize> {
        let ch = &self.nodes[v].children;
        ch.iter().take(ch.len().saturating_sub(1)).map(|&c| self.nodes[c].span.1).collect()
    }

    pub fn root_cuts(&self) -> Vec<usize> {
        self.cuts(self.root())
    }

    /// BFS list of son counts; the canonical sort key.
    pub fn degree_sequence(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.children.len()).collect()
    }

    /// Subtree rooted at `v`, relabelled so its leaves are `1..`.
    pub fn subtree(&self, v: VertexId) -> RootedTree {
        Self::from_shape(&self.shape_at(v))
    }

    pub fn to_paren(&self) -> String {
        fn go(t: &RootedTree, v: VertexId, out: &mut String) {
            if t.is_leaf(v) {
                out.push_str(&t.nodes[v].span.0.to_string());
            } else {
                out.push('(');
                for (i, &c) in t.nodes[v].children.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    go(t, c, out);
                }
                out.push(')');
            }
        }
        let mut s = String::new();
        go(self, 0, &mut s);
        s
    }

    pub fn from_paren(s: &str) -> Result<Self> {
        let tokens: Vec<char> = s.chars().map(|c| if c.is_whitespace() { ' ' } else { c }).collect();
        let mut pos = 0usize;
        let mut next_label = 1usize;
        fn parse(
            t: &[char],
            pos: &mut usize,
            next_label: &mut usize,
        ) -> Result<Shape> {
            while *pos < t.len() && t[*pos] == ' ' {
                *pos += 1;
            }
            if *pos >= t.len() {
                return Err(Error::Serialization("unexpected end of tree string".into()));
            }
            if t[*pos] == '(' {
                *pos += 1;
                let mut kids = Vec::new();
                loop {
                    while *pos < t.len() && t[*pos] == ' ' {
                        *pos += 1;
                    }
                    if *pos >= t.len() {
                        return Err(Error::Serialization("unbalanced parenthesis".into()));
                    }
                    if t[*pos] == ')' {
                        *pos += 1;
                        break;
                    }
                    kids.push(parse(t, pos, next_label)?);
                }
                if kids.len() < 2 {
                    return Err(Error::Serialization("internal vertex with fewer than two sons".into()));
                }
                Ok(Shape::Node(kids))
            } else {
                let start = *pos;
                while *pos < t.len() && t[*pos].is_ascii_digit() {
                    *pos += 1;
                }
                let label: usize = t[start..*pos]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Serialization(format!("bad token at {start}")))?;
                if label != *next_label {
                    return Err(Error::Serialization(format!(
                        "leaf {label} out of order, expected {next_label}"
                    )));
                }
                *next_label += 1;
                Ok(Shape::Leaf)
            }
        }
        let shape = parse(&tokens, &mut pos, &mut next_label)?;
        if tokens[pos..].iter().any(|&c| c != ' ') {
            return Err(Error::Serialization("trailing characters".into()));
        }
        Ok(Self::from_shape(&shape))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "leaves": self.n,
            "paren": self.to_paren(),
            "nodes": self.nodes,
        })
    }

    /// Copies the subtrees rooted at `tops` under a fresh root.
    fn graft(&self, tops: &[VertexId]) -> RootedTree {
        Self::from_shape(&Shape::Node(tops.iter().map(|&v| self.shape_at(v)).collect()))
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_paren())
    }
}

fn shapes(n: usize, memo: &mut Vec<Option<Vec<Shape>>>) -> Vec<Shape> {
    if let Some(s) = &memo[n] {
        return s.clone();
    }
    let mut out = vec![];
    if n == 1 {
        out.push(Shape::Leaf);
    } else {
        // Compositions of n into at least two parts.
        fn compose(rest: usize, parts: &mut Vec<usize>, acc: &mut Vec<Vec<usize>>) {
            if rest == 0 {
                if parts.len() >= 2 {
                    acc.push(parts.clone());
                }
                return;
            }
            for first in 1..=rest {
                parts.push(first);
                compose(rest - first, parts, acc);
                parts.pop();
            }
        }
        let mut comps = vec![];
        compose(n, &mut vec![], &mut comps);
        for comp in comps {
            let options: Vec<Vec<Shape>> = comp.iter().map(|&m| shapes(m, memo)).collect();
            let mut idx = vec![0usize; options.len()];
            'outer: loop {
                out.push(Shape::Node(idx.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect()));
                for p in (0..idx.len()).rev() {
                    idx[p] += 1;
                    if idx[p] < options[p].len() {
                        continue 'outer;
                    }
                    idx[p] = 0;
                }
                break;
            }
        }
    }
    memo[n] = Some(out.clone());
    out
}

/// All trees of the class with `n` leaves, ordered by level-order degree sequence.
pub fn enumerate_trees(n: usize) -> Result<Vec<RootedTree>> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n > MAX_ENUM_LEAVES {
        return Err(Error::NumericGuard(format!(
            "enumeration limited to n <= {MAX_ENUM_LEAVES}, got {n}"
        )));
    }
    let mut memo = vec![None; n + 1];
    let mut trees: Vec<RootedTree> = shapes(n, &mut memo).iter().map(RootedTree::from_shape).collect();
    trees.sort_by_key(|t| t.degree_sequence());
    Ok(trees)
}

/// Gaps `ξ_{l+1} - ξ_l`; errors unless `xi` is strictly increasing.
pub fn gaps(xi: &[f64]) -> Result<Vec<f64>> {
    let g: Vec<f64> = xi.windows(2).map(|w| w[1] - w[0]).collect();
    if g.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::Domain("frequencies must be finite and strictly increasing".into()));
    }
    Ok(g)
}

/// Membership of a gap vector (`gaps[l-1] = |I_l|`) in `R_G`.
pub fn region_membership_gaps(g: &RootedTree, gap: &[f64], rp: &RegionParams) -> Result<bool> {
    if gap.len() + 1 != g.leaves() {
        return Err(Error::DimensionMismatch { expected: g.leaves() - 1, got: gap.len() });
    }
    for u in g.internal_vertices() {
        if !vertex_constraints_hold(g, u, gap, rp) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn vertex_constraints_hold(g: &RootedTree, u: VertexId, gap: &[f64], rp: &RegionParams) -> bool {
    let cuts = g.cuts(u);
    let (lu, ru) = g.nodes[u].span;
    let cut_vals: Vec<f64> = cuts.iter().map(|&r| gap[r - 1]).collect();
    let cmax = cut_vals.iter().cloned().fold(f64::MIN, f64::max);
    let cmin = cut_vals.iter().cloned().fold(f64::MAX, f64::min);
    if cut_vals.len() > 1 && !rp.comparable(cmin, cmax) {
        return false;
    }
    (lu..ru)
        .filter(|l| !cuts.contains(l))
        .all(|l| rp.much_less(gap[l - 1], cmin))
}

pub fn region_membership(g: &RootedTree, xi: &[f64], rp: &RegionParams) -> Result<bool> {
    if xi.len() != g.leaves() {
        return Err(Error::DimensionMismatch { expected: g.leaves(), got: xi.len() });
    }
    region_membership_gaps(g, &gaps(xi)?, rp)
}

pub fn shares_cut(g1: &RootedTree, g2: &RootedTree) -> Option<usize> {
    let a: BTreeSet<usize> = g1.root_cuts().into_iter().collect();
    g2.root_cuts().into_iter().filter(|c| a.contains(c)).min()
}

fn select(g: &RootedTree, forbidden: &BTreeSet<usize>) -> Vec<VertexId> {
    let mut selected = vec![];
    let mut frontier: Vec<VertexId> = g.children(g.root()).to_vec();
    while !frontier.is_empty() {
        let mut next = vec![];
        for v in frontier {
            let (l, r) = g.nodes[v].span;
            if (l..r).any(|i| forbidden.contains(&i)) {
                next.extend_from_slice(g.children(v));
            } else {
                selected.push(v);
            }
        }
        frontier = next;
    }
    selected.sort_by_key(|&v| g.nodes[v].span.0);
    selected
}

/// Retracts of a pair without a common root cut: each tree keeps as root sons
/// the highest vertices whose half-open run `[l_v, r_v)` avoids the other
/// tree's root cuts.
pub fn retract_pair(g1: &RootedTree, g2: &RootedTree) -> Result<(RootedTree, RootedTree)> {
    if g1.leaves() != g2.leaves() {
        return Err(Error::Precondition("trees have different leaf counts".into()));
    }
    if g1.leaves() < 2 {
        return Err(Error::Precondition("retracts need at least two leaves".into()));
    }
    if shares_cut(g1, g2).is_some() {
        return Err(Error::Precondition("trees already share a root cut".into()));
    }
    let s1: BTreeSet<usize> = g1.root_cuts().into_iter().collect();
    let s2: BTreeSet<usize> = g2.root_cuts().into_iter().collect();
    let r1 = g1.graft(&select(g1, &s2));
    let r2 = g2.graft(&select(g2, &s1));
    Ok((r1, r2))
}

/// Postconditions of [`retract_pair`]: son runs partition `1..=n`, every cut
/// of either input is a root cut of each retract, and the retracts share a cut.
pub fn check_retract(
    g1: &RootedTree,
    g2: &RootedTree,
    r1: &RootedTree,
    r2: &RootedTree,
) -> std::result::Result<(), String> {
    let n = g1.leaves();
    let union: BTreeSet<usize> = g1.root_cuts().into_iter().chain(g2.root_cuts()).collect();
    for (name, r) in [("first", r1), ("second", r2)] {
        let mut next = 1;
        for &c in r.children(r.root()) {
            let (l, rr) = r.nodes[c].span;
            if l != next {
                return Err(format!("{name} retract sons do not partition 1..{n}"));
            }
            next = rr + 1;
        }
        if next != n + 1 {
            return Err(format!("{name} retract sons do not reach {n}"));
        }
        let cuts: BTreeSet<usize> = r.root_cuts().into_iter().collect();
        if !union.is_subset(&cuts) {
            return Err(format!("{name} retract misses a cut of S1 ∪ S2"));
        }
    }
    if shares_cut(r1, r2).is_none() {
        return Err("retracts share no root cut".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub uncovered: usize,
    pub uncovered_fraction: f64,
    /// Hits per tree in canonical order.
    pub hits: Vec<usize>,
    /// `multiplicity[m]` counts samples lying in exactly `m` regions.
    pub multiplicity: Vec<usize>,
    /// Up to ten uncovered gap vectors.
    pub uncovered_examples: Vec<Vec<f64>>,
    pub trees: Vec<String>,
}

impl CoverageReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tree_id,tree,hits\n");
        for (i, (t, h)) in self.trees.iter().zip(&self.hits).enumerate() {
            s.push_str(&format!("{i},\"{t}\",{h}\n"));
        }
        s
    }
}

/// Natural-log half-range of sampled gaps: `|I_l| ∈ [e^{-R}, e^{R}]`.
pub const COVERAGE_LOG_RANGE: f64 = 8.0;

pub fn sample_log_gaps(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count)
        .map(|_| rng.gen_range(-COVERAGE_LOG_RANGE..COVERAGE_LOG_RANGE).exp())
        .collect()
}

pub fn coverage_report(n: usize, rp: &RegionParams, samples: usize, seed: u64) -> Result<CoverageReport> {
    if n > MAX_COVERAGE_LEAVES {
        return Err(Error::NumericGuard(format!("coverage limited to n <= {MAX_COVERAGE_LEAVES}")));
    }
    rp.validate()?;
    let trees = enumerate_trees(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; trees.len()];
    let mut multiplicity = vec![0usize; trees.len() + 1];
    let mut uncovered = 0;
    let mut examples = vec![];
    for _ in 0..samples {
        let gap = sample_log_gaps(&mut rng, n.saturating_sub(1));
        let mut m = 0;
        for (i, t) in trees.iter().enumerate() {
            if region_membership_gaps(t, &gap, rp)? {
                hits[i] += 1;
                m += 1;
            }
        }
        multiplicity[m] += 1;
        if m == 0 {
            uncovered += 1;
            if examples.len() < 10 {
                examples.push(gap);
            }
        }
    }
    Ok(CoverageReport {
        n,
        samples,
        seed,
        uncovered,
        uncovered_fraction: if samples == 0 { 0.0 } else { uncovered as f64 / samples as f64 },
        hits,
        multiplicity,
        uncovered_examples: examples,
        trees: trees.iter().map(|t| t.to_paren()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(c_sep: f64, c_comp: f64) -> RegionParams {
        RegionParams::new(c_sep, c_comp, 4.0).unwrap()
    }

    fn t(s: &str) -> RootedTree {
        RootedTree::from_paren(s).unwrap()
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_trees(1).unwrap().len(), 1);
        assert_eq!(enumerate_trees(2).unwrap().len(), 1);
        assert_eq!(enumerate_trees(3).unwrap().len(), 3);
        assert!(matches!(enumerate_trees(9), Err(Error::NumericGuard(_))));
    }

    #[test]
    fn canonical_order_is_by_degree_sequence() {
        let trees = enumerate_trees(3).unwrap();
        let names: Vec<String> = trees.iter().map(|t| t.to_paren()).collect();
        assert_eq!(names, vec!["(1 (2 3))", "((1 2) 3)", "(1 2 3)"]);
    }

    #[test]
    fn intervals() {
        let g = t("((1 (2 3)) 4 (5 6))");
        assert_eq!(g.index_interval(g.root()).unwrap(), (1, 6));
        let leaf3 = g.vertex_with_span(3, 3).unwrap();
        assert_eq!(g.index_interval(leaf3).unwrap(), (3, 3));
        assert!(g.vertex_with_span(2, 3).is_some());
        assert!(g.index_interval(99).is_err());
    }

    #[test]
    fn figure_three_regions() {
        let left = t("((1 (2 3)) 4 (5 6))");
        let r = rp(4.0, 2.0);
        assert!(region_membership_gaps(&left, &[8.0, 1.0, 64.0, 64.0, 1.0], &r).unwrap());
        assert!(!region_membership_gaps(&left, &[1.0, 8.0, 64.0, 64.0, 1.0], &r).unwrap());
        let right = t("(((1 2) (3 4)) (5 6))");
        assert!(region_membership_gaps(&right, &[1.0, 8.0, 1.0, 64.0, 1.0], &r).unwrap());
        assert!(!region_membership_gaps(&right, &[8.0, 8.0, 1.0, 64.0, 1.0], &r).unwrap());
    }

    #[test]
    fn two_leaf_region_is_everything() {
        let g = &enumerate_trees(2).unwrap()[0];
        for xi in [[0.0, 1e-9], [-5.0, 3.0], [1.0, 1e6]] {
            assert!(region_membership(g, &xi, &rp(16.0, 4.0)).unwrap());
        }
        assert!(region_membership(g, &[1.0, 1.0], &rp(16.0, 4.0)).is_err());
    }

    #[test]
    fn cut_examples() {
        assert_eq!(shares_cut(&t("((1 2) (3 4))"), &t("((1 2) (3 4))")), Some(2));
        assert_eq!(shares_cut(&t("(1 (2 3))"), &t("((1 2) 3)")), None);
    }

    #[test]
    fn three_leaf_retract_is_star() {
        let (a, b) = (t("(1 (2 3))"), t("((1 2) 3)"));
        let (r1, r2) = retract_pair(&a, &b).unwrap();
        assert_eq!(r1.to_paren(), "(1 2 3)");
        assert_eq!(r2.to_paren(), "(1 2 3)");
        check_retract(&a, &b, &r1, &r2).unwrap();
        assert!(retract_pair(&a, &a).is_err());
    }

    #[test]
    fn paren_round_trip_and_errors() {
        for g in enumerate_trees(5).unwrap() {
            assert_eq!(RootedTree::from_paren(&g.to_paren()).unwrap(), g);
        }
        assert!(RootedTree::from_paren("((1) 2)").is_err());
        assert!(RootedTree::from_paren("(2 1)").is_err());
        assert!(RootedTree::from_paren("(1 2").is_err());
    }

    #[test]
    fn three_leaf_coverage() {
        let full = coverage_report(3, &rp(4.0, 4.0), 20_000, 7).unwrap();
        assert_eq!(full.uncovered, 0);
        let gap = coverage_report(3, &rp(4.0, 2.0), 20_000, 7).unwrap();
        assert!(gap.uncovered_fraction > 0.0);
        let two = coverage_report(2, &rp(16.0, 4.0), 1000, 1).unwrap();
        assert_eq!(two.uncovered, 0);
    }
}
