//! The acceptance suite as a library: one check per criterion, each with
//! pinned tolerances and a wall-time budget.

pub mod oracles;

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::akns::{carleson_bound_check, nondegeneracy, solve, solve_rk, AknsSystem, Potential};
use crate::audit::{calibration_ensemble, jn_ensemble, strat_ensemble, tool_ensemble, AuditConstants};
use crate::dyadic::{RegionParams, ShiftedDyadicInterval};
use crate::error::{Error, Result};
use crate::experiments::{chirp_sweep, maximal_chirp_sweep, norm_scan, ChirpConfig, NormScanConfig};
use crate::grid::{GridFunction, Preset, C64};
use crate::ops::{bht_kernel, bht_symbol_apply, simplex_apply, SimplexOpSpec};
use crate::size_energy::{delicate_decay_probe, DelicateConfig};
use crate::symbols::{sample_simplex, telescope};
use crate::tiles::{
    lacunary_family, model_apply, model_apply_with, rank1_check, DyadicInterval, LacunaryConfig, ModelConfig,
    TileCollection, VectorTile, VertexTiles, DEFAULT_PACKET_ORDER, DEFAULT_RANK1_CONSTANT,
};
use crate::trees::{enumerate_trees, region_membership, RootedTree};
use oracles::*;

/// Seed for every acceptance ensemble; distinct from the calibration seed.
pub const ACCEPTANCE_SEED: u64 = 20261116;

pub const ORACLE_REL_TOL: f64 = 1e-10;
pub const PARTITION_TOL: f64 = 1e-6;
pub const TELESCOPE_TOL: f64 = 1e-12;
pub const PARTITION_POINTS: usize = 10_000;
pub const HOELDER_CHANGE_TOL: f64 = 0.10;
pub const CHIRP_R2_MIN: f64 = 0.95;
pub const CHIRP_SPREAD_MAX: f64 = 2.0;
/// Bound on `‖M̃₂(f₁, f₂)‖₁ / ‖f₁‖₂‖f₂‖₂` for nondegenerate phases.
pub const MAXIMAL_RATIO_MAX: f64 = 1.0;
pub const DEGENERATE_ALPHA: [f64; 2] = [1.0, -1.0];
pub const NONDEGENERATE_ALPHA: [f64; 2] = [1.0, 2.0];
pub const KERNEL_REL_TOL: f64 = 1e-2;
pub const MODEL_TOL: f64 = 1e-12;
pub const TOOL_GROWTH_MAX: f64 = 2.0;
pub const DELICATE_SLOPE_MAX: f64 = -1.0;
pub const AKNS_TOL: f64 = 1e-5;
pub const CARLESON_RATIO_MAX: f64 = 1.0 + 1e-6;

/// `(id, name, budget in seconds)`.
pub const CRITERIA: [(u8, &str, f64); 10] = [
    (1, "oracle equivalence", 10.0),
    (2, "tree enumeration", 1.0),
    (3, "partition of unity", 60.0),
    (4, "hoelder-ratio stability", 300.0),
    (5, "chirp dichotomy", 300.0),
    (6, "bht kernel vs symbol", 60.0),
    (7, "model operators", 30.0),
    (8, "size/energy suite", 300.0),
    (9, "delicate bessel decay", 120.0),
    (10, "akns", 120.0),
];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// Named sub-checks; `pass` requires all of them and the time budget.
    pub parts: Vec<(String, bool)>,
    pub detail: String,
    pub seconds: f64,
    pub budget: f64,
    #[serde(skip)]
    pub error: Option<Error>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<24} {} [{:.2}s of {}s] {}",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.seconds,
            self.budget,
            self.detail
        )
    }
}

struct Outcome {
    parts: Vec<(String, bool)>,
    detail: String,
}

fn outcome(parts: &[(&str, bool)], detail: String) -> Result<Outcome> {
    Ok(Outcome { parts: parts.iter().map(|&(n, ok)| (n.to_string(), ok)).collect(), detail })
}

pub fn run_criterion(id: u8) -> Result<CriterionResult> {
    let &(_, name, budget) =
        CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::Domain(format!("no criterion {id}")))?;
    let start = Instant::now();
    let res = match id {
        1 => oracle_equivalence(),
        2 => tree_enumeration(),
        3 => partition_of_unity(),
        4 => hoelder_stability(),
        5 => chirp_dichotomy(),
        6 => kernel_agreement(),
        7 => model_operators(),
        8 => size_energy_suite(),
        9 => delicate_decay(),
        _ => akns_checks(),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (parts, mut detail, error) = match res {
        Ok(o) => (o.parts, o.detail, None),
        Err(e) => (vec![("runs".to_string(), false)], format!("error: {e}"), Some(e)),
    };
    let pass = parts.iter().all(|p| p.1);
    if seconds > budget {
        detail.push_str("; over time budget");
    }
    Ok(CriterionResult { id, name, pass: pass && seconds <= budget, parts, detail, seconds, budget, error })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0).expect("listed criterion")).collect()
}

fn bandlimited(band: usize, seed: u64, n: usize, period: f64) -> Result<GridFunction> {
    GridFunction::from_preset(&Preset::RandomBandlimited { band, seed }, n, period)
}

fn oracle_equivalence() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in [2usize, 3] {
        for grid in [16usize, 32] {
            let spec = SimplexOpSpec::plain(n);
            for e in 0..50u64 {
                let fs: Vec<GridFunction> = (0..n as u64)
                    .map(|j| bandlimited(grid / 2 - 1, ACCEPTANCE_SEED + 10 * e + j, grid, 1.0))
                    .collect::<Result<_>>()?;
                let fast = simplex_apply(&spec, &fs)?;
                worst = worst.max(rel_l2(fast.samples(), &brute_force_simplex(&spec.coefficients(), &fs)));
            }
        }
    }
    outcome(&[("brute force", worst <= ORACLE_REL_TOL)], format!("max relative L2 error {worst:.2e} over 200 inputs"))
}

fn tree_enumeration() -> Result<Outcome> {
    let mut counts = vec![];
    let mut same = true;
    for n in 1..=6 {
        let lib: Vec<String> = enumerate_trees(n)?.iter().map(RootedTree::to_paren).collect();
        let distinct: BTreeSet<String> = lib.iter().cloned().collect();
        same &= distinct.len() == lib.len() && distinct == trees_by_blocks(1, n);
        counts.push(lib.len());
    }
    outcome(
        &[("oracle", same), ("two and three leaves", counts[1] == 1 && counts[2] == 3)],
        format!("counts {counts:?}, block-split oracle {}", if same { "agrees" } else { "disagrees" }),
    )
}

fn partition_of_unity() -> Result<Outcome> {
    let rp = RegionParams::new(4.0, 4.0, 4.0)?;
    // points that stay inside some region when the constants are tightened
    let margin = RegionParams::new(5.0, 3.2, 4.0)?;
    let t = telescope(3, &[0, 1, 2], &rp, 8)?;
    let trees = enumerate_trees(3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ACCEPTANCE_SEED + 3);
    let (mut kept, mut drawn) = (0usize, 0usize);
    let (mut sum_err, mut identity_err): (f64, f64) = (0.0, 0.0);
    while kept < PARTITION_POINTS && drawn < 20 * PARTITION_POINTS {
        drawn += 1;
        let xi = sample_simplex(3, &mut rng);
        let c = t.check(&xi);
        identity_err = identity_err.max(c.identity_error).max(c.recursion_error);
        let mut inside = false;
        for g in &trees {
            inside |= region_membership(g, &xi, &margin)?;
        }
        if inside {
            kept += 1;
            sum_err = sum_err.max((c.sum - 1.0).abs());
        }
    }
    outcome(
        &[
            ("sample count", kept == PARTITION_POINTS),
            ("sum", sum_err < PARTITION_TOL),
            ("telescope", identity_err < TELESCOPE_TOL),
        ],
        format!("max |sum - 1| {sum_err:.2e} on {kept} points, telescope identity {identity_err:.2e} on {drawn} points"),
    )
}

fn hoelder_stability() -> Result<Outcome> {
    let mut ok = [true; 2];
    let mut parts = vec![];
    for (i, arity) in [2usize, 3].into_iter().enumerate() {
        let cfg =
            NormScanConfig { arity, sizes: vec![1 << 10, 1 << 13], ensemble: 100, band: 16, seed: ACCEPTANCE_SEED, period: 1.0 };
        let rows = norm_scan(&cfg)?;
        let change = (rows[1].max_ratio - rows[0].max_ratio).abs() / rows[0].max_ratio;
        ok[i] = change < HOELDER_CHANGE_TOL;
        parts.push(format!("n={arity}: {:.4} -> {:.4} ({:.2}%)", rows[0].max_ratio, rows[1].max_ratio, 100.0 * change));
    }
    outcome(&[("n = 2", ok[0]), ("n = 3", ok[1])], parts.join(", "))
}

fn chirp_dichotomy() -> Result<Outcome> {
    let sweep = chirp_sweep(&ChirpConfig::default())?;
    let tilde = sweep.tilde_fit.r2 >= CHIRP_R2_MIN && sweep.tilde_fit.slope > 0.0;
    let bounded = sweep.t3_spread <= CHIRP_SPREAD_MAX;
    let degenerate = maximal_chirp_sweep(&ChirpConfig::default(), &DEGENERATE_ALPHA)?;
    let nondegenerate = maximal_chirp_sweep(&ChirpConfig::default(), &NONDEGENERATE_ALPHA)?;
    let grows = degenerate.fit.r2 >= CHIRP_R2_MIN && degenerate.fit.slope > 0.0;
    let stays = nondegenerate.max_ratio <= MAXIMAL_RATIO_MAX;
    let verdict = |ok: bool| if ok { "ok" } else { "fails" };
    outcome(
        &[
            ("t3 tilde grows", tilde),
            ("t3 bounded", bounded),
            ("degenerate maximal grows", grows),
            ("nondegenerate maximal bounded", stays),
        ],
        format!(
            "T3~ slope {:.3} R2 {:.3} ({}), T3 max/min {:.3} ({}); M2 (1,-1) slope {:.3} R2 {:.3} ({}), M2 (1,2) max {:.3} ({})",
            sweep.tilde_fit.slope,
            sweep.tilde_fit.r2,
            verdict(tilde),
            sweep.t3_spread,
            verdict(bounded),
            degenerate.fit.slope,
            degenerate.fit.r2,
            verdict(grows),
            nondegenerate.max_ratio,
            verdict(stays),
        ),
    )
}

fn kernel_agreement() -> Result<Outcome> {
    let n = 4096;
    let mut worst: f64 = 0.0;
    for e in 0..20u64 {
        let f1 = bandlimited(16, ACCEPTANCE_SEED + 2 * e, n, 1.0)?;
        let f2 = bandlimited(16, ACCEPTANCE_SEED + 2 * e + 1, n, 1.0)?;
        let k = bht_kernel(&f1, &f2)?;
        let s = bht_symbol_apply(&f1, &f2)?;
        worst = worst.max(rel_l2(k.output.samples(), s.samples()));
    }
    outcome(&[("kernel", worst <= KERNEL_REL_TOL)], format!("max relative L2 error {worst:.2e} over 20 inputs"))
}

const MODEL_N: usize = 4096;
const MODEL_PERIOD: f64 = 32.0;

fn vt(j: i32, k: i64, ms: &[i64]) -> Result<VectorTile> {
    let freqs = ms.iter().map(|&m| ShiftedDyadicInterval::new(-j, m, 0)).collect::<Result<_>>()?;
    VectorTile::new(DyadicInterval::new(j, k), freqs)
}

fn coll(tiles: Vec<VectorTile>) -> Result<TileCollection> {
    TileCollection::new(tiles, DEFAULT_RANK1_CONSTANT)
}

fn model_operators() -> Result<Outcome> {
    let (n, period) = (MODEL_N, MODEL_PERIOD);
    let fs: Vec<GridFunction> =
        (0..3).map(|i| bandlimited(1000, ACCEPTANCE_SEED + 7 + i, n, period)).collect::<Result<_>>()?;
    let samples = |i: usize| fs[i].samples().to_vec();
    let mut worst: f64 = 0.0;

    let star = RootedTree::star(2)?;
    let single = coll(vec![vt(0, 10, &[1, 5, 9])?])?;
    let out = model_apply(&star, &HashMap::from([(star.root(), single.clone())]), &fs[..2], 1)?;
    let want = vertex_sum(&single, |_| vec![samples(0), samples(1)], 1, DEFAULT_PACKET_ORDER, n, period);
    worst = worst.max(max_err(out.samples(), &want));

    let g = RootedTree::from_paren("(1 (2 3))")?;
    let v = g.vertex_with_span(2, 3).ok_or_else(|| Error::Domain("missing inner vertex".into()))?;
    let root = coll(vec![vt(-1, 20, &[2, 6, 10])?, vt(-1, 41, &[-5, -1, 3])?, vt(-2, 3, &[0, 2, 4])?])?;
    let inner = coll(vec![
        vt(3, 1, &[8, 54, 100])?,
        vt(3, 2, &[-40, 30, -8])?,
        vt(2, 0, &[0, 20, 40])?,
        vt(1, 5, &[-3, 11, 25])?,
    ])?;
    let tiles: VertexTiles = HashMap::from([(g.root(), root.clone()), (v, inner.clone())]);
    let cfg = ModelConfig { alpha_samples: 4, scale_gap: 3, packet_order: 4 };
    let out = model_apply_with(&g, &tiles, &fs, &cfg)?;
    let want = vertex_sum(
        &root,
        |p| {
            let keep: Vec<VectorTile> = inner.tiles.iter().filter(|q| q.time.j >= p.time.j + 3).cloned().collect();
            let keep = coll(keep).expect("sub-collection of a valid collection");
            vec![samples(0), vertex_sum(&keep, |_| vec![samples(1), samples(2)], 4, 4, n, period)]
        },
        4,
        4,
        n,
        period,
    );
    worst = worst.max(max_err(out.samples(), &want));

    let mut rank1 = true;
    let mut largest = 0;
    for levels in 1..=4 {
        let fam = lacunary_family(&LacunaryConfig { levels, ..LacunaryConfig::default() })?;
        let rep = rank1_check(&fam)?;
        rank1 &= rep.ok;
        largest = largest.max(fam.len());
    }
    outcome(
        &[("nested formula", worst < MODEL_TOL), ("rank-1", rank1 && largest <= 256)],
        format!(
            "nested-formula error {worst:.2e} on 1 and 7 tiles, rank-1 {} up to {largest} vector tiles",
            if rank1 { "holds" } else { "fails" }
        ),
    )
}

fn size_energy_suite() -> Result<Outcome> {
    let k = AuditConstants::load()?;
    let s = ACCEPTANCE_SEED;
    let mut jn = (f64::INFINITY, 0.0f64);
    for tiles in [8usize, 16, 32, 64] {
        let r = jn_ensemble(s + tiles as u64, 50, tiles)?;
        jn = (jn.0.min(r.min), jn.1.max(r.max));
    }
    let a = jn.0 >= 1.0 / k.c_jn && jn.1 <= k.c_jn;
    let cal = calibration_ensemble(s, 100)?.max;
    let b = cal <= k.c_cal;
    let (t16, t64) = (tool_ensemble(s, 100, 16)?.max, tool_ensemble(s, 100, 64)?.max);
    let c = t16.max(t64) <= k.c_tool && t64 / t16 <= TOOL_GROWTH_MAX;
    let d = strat_ensemble(s, 100, 64);
    let verdict = |ok: bool| if ok { "ok" } else { "fails" };
    outcome(
        &[("jn", a), ("energy", b), ("tool", c), ("stratify", d.is_ok())],
        format!(
            "(a) jn ratio in [{:.3}, {:.3}] vs C_jn {} {}; (b) energy/L2 {cal:.3} vs C_cal {:.3} {}; \
             (c) tool {t16:.3} (16) {t64:.3} (64) vs C_tool {:.3} {}; (d) stratify {}; constants v{}",
            jn.0,
            jn.1,
            k.c_jn,
            verdict(a),
            k.c_cal,
            verdict(b),
            k.c_tool,
            verdict(c),
            match &d {
                Ok(_) => "re-verifies".to_string(),
                Err(e) => format!("fails: {e}"),
            },
            k.version
        ),
    )
}

fn delicate_decay() -> Result<Outcome> {
    let rep = delicate_decay_probe(&DelicateConfig::default())?;
    outcome(&[("slope", rep.slope <= DELICATE_SLOPE_MAX)], format!("slope {:.3} over k2 in 4..=9", rep.slope))
}

fn gauss(center: f64, width: f64, amplitude: f64) -> Potential {
    Potential::Gaussian { center, width, amplitude }
}

fn akns_checks() -> Result<Outcome> {
    let phase = |lambda: f64, d: f64, y: f64| C64::from_polar(1.0, lambda * d * y);
    let mut err2: f64 = 0.0;
    let (d1, d2, lambda) = (1.5, -0.5, 2.3);
    let f = gauss(5.0, 1.0, 1.0);
    let sys = AknsSystem::new(vec![d1, d2], vec![(0, 1, f.clone())], lambda)?;
    let (c, ct) = (C64::new(0.7, -0.2), C64::new(0.1, 0.4));
    for sol in [solve(&sys, 0.0, 10.0, 1000, &[ct, c])?, solve_rk(&sys, 0.0, 10.0, 1000, &[ct, c])?] {
        for i in (0..=1000).step_by(100) {
            let x = sol.x[i];
            let integ = simpson(&|y| f.eval(y) * phase(lambda, d1 - d2, y), 0.0, x, 1e-13);
            err2 = err2.max((sol.v[i][0] - (c * integ + ct)).norm()).max((sol.v[i][1] - c).norm());
        }
    }

    let d = [2.0, 0.5, -1.0];
    let lambda = 1.3;
    let (f1, f2, f3) = (gauss(4.0, 1.0, 0.8), gauss(5.0, 0.7, -0.6), gauss(3.0, 1.2, 0.9));
    let sys = AknsSystem::new(d.to_vec(), vec![(0, 1, f1.clone()), (0, 2, f2.clone()), (1, 2, f3.clone())], lambda)?;
    let x = 8.0;
    let nested = simplex2(
        &|z| f3.eval(z) * phase(lambda, d[1] - d[2], z),
        &|y| f1.eval(y) * phase(lambda, d[0] - d[1], y),
        0.0,
        x,
    );
    let direct = simpson(&|y| f2.eval(y) * phase(lambda, d[0] - d[2], y), 0.0, x, 1e-13);
    let one = C64::new(1.0, 0.0);
    let sol = solve(&sys, 0.0, x, 1000, &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), one])?;
    let err3 = (sol.v[1000][0] - (nested + direct)).norm();

    let (n, period) = (1024, 32.0);
    let lambdas: Vec<f64> = (1..=32).map(|i| 0.37 * i as f64).collect();
    let mut ratio: f64 = 0.0;
    for seed in 0..2 {
        let g = bandlimited(16, ACCEPTANCE_SEED + seed, n, period)?;
        for r in carleson_bound_check(&g, (0.5, -1.5), &lambdas, C64::new(0.8, 0.3), C64::new(-0.2, 0.1))? {
            ratio = ratio.max(r.ratio);
        }
    }

    let degenerate = !nondegeneracy(&[1.0, -1.0])?.ok;
    let gaps = nondegeneracy(&[d[0] - d[1], d[1] - d[2]])?.ok;
    outcome(
        &[
            ("2x2", err2 < AKNS_TOL),
            ("3x3", err3 < AKNS_TOL),
            ("carleson", ratio <= CARLESON_RATIO_MAX),
            ("nondegeneracy", degenerate && gaps),
        ],
        format!(
            "2x2 error {err2:.2e}, 3x3 error {err3:.2e}, Carleson ratio {ratio:.6} over 32 lambdas, \
             (1,-1) {}, gaps {}",
            if degenerate { "flagged" } else { "not flagged" },
            if gaps { "pass" } else { "flagged" }
        ),
    )
}
