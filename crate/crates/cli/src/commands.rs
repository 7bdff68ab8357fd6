//! One flag struct and one resolved config per subcommand.

use std::collections::HashMap;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use simplex_lab::audit::{self, AuditConstants};
use simplex_lab::dyadic::RegionParams;
use simplex_lab::experiments::{chirp_sweep, linear_fit, norm_scan, ChirpConfig, NormScanConfig};
use simplex_lab::grid::{lp_quasinorm, GridFunction, Preset, C64};
use simplex_lab::ops::{bht_kernel, bht_symbol_apply, maximal_apply, simplex_apply, t3_kernel, t3_symbol_apply, SimplexOpSpec, T3Variant};
use simplex_lab::selfcheck::{run_criterion, ACCEPTANCE_SEED, CRITERIA};
use simplex_lab::size_energy::{delicate_decay_probe, DelicateConfig, PacketKind};
use simplex_lab::symbols::{sample_simplex, telescope};
use simplex_lab::tiles::{lacunary_family, model_apply, rank1_check, HostGrid, LacunaryConfig, DEFAULT_PACKET_ORDER};
use simplex_lab::trees::{coverage_report, enumerate_trees, RootedTree, MAX_COVERAGE_LEAVES};
use simplex_lab::{akns, Error};

use crate::artifacts::{num, Artifacts};
use crate::config::Failure;
use crate::svg::{Plot, Series};

/// `None` when the experiment has no acceptance threshold.
pub type Verdict = Option<bool>;

pub trait Experiment: Serialize + DeserializeOwned {
    const NAME: &'static str;
    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure>;
}

fn region(c_sep: f64, c_comp: f64, c_dist: f64) -> Result<RegionParams, Failure> {
    Ok(RegionParams::new(c_sep, c_comp, c_dist)?)
}

fn bandlimited(band: usize, seed: u64, n: usize, period: f64) -> Result<GridFunction, Failure> {
    Ok(GridFunction::from_preset(&Preset::RandomBandlimited { band, seed }, n, period)?)
}

fn samples_rows(f: &GridFunction) -> impl Iterator<Item = Vec<String>> + '_ {
    f.samples().iter().enumerate().map(|(m, z)| vec![m.to_string(), num(f.x(m)), num(z.re), num(z.im)])
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

// trees

#[derive(Debug, Args, Serialize)]
pub struct TreesArgs {
    /// Number of leaves.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c_sep: Option<f64>,
    #[arg(long)]
    pub c_comp: Option<f64>,
    #[arg(long)]
    pub c_dist: Option<f64>,
    /// Coverage samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreesConfig {
    pub n: usize,
    pub c_sep: f64,
    pub c_comp: f64,
    pub c_dist: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for TreesConfig {
    fn default() -> Self {
        let rp = RegionParams::default();
        Self { n: 4, c_sep: rp.c_sep, c_comp: rp.c_comp, c_dist: rp.c_dist, samples: 10_000, seed: 1 }
    }
}

impl Experiment for TreesConfig {
    const NAME: &'static str = "trees";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let trees = enumerate_trees(self.n)?;
        say!("count {}", trees.len());
        for t in &trees {
            say!("{}", t.to_paren());
        }
        out.csv(
            "trees.csv",
            &["tree_id", "tree", "height", "degree_sequence"],
            trees.iter().enumerate().map(|(i, t)| {
                let degrees: Vec<String> = t.degree_sequence().iter().map(|d| d.to_string()).collect();
                vec![i.to_string(), t.to_paren(), t.height().to_string(), degrees.join(" ")]
            }),
        )?;
        if self.n <= MAX_COVERAGE_LEAVES {
            let rp = region(self.c_sep, self.c_comp, self.c_dist)?;
            let rep = coverage_report(self.n, &rp, self.samples, self.seed)?;
            say!("uncovered {} of {} ({})", rep.uncovered, rep.samples, rep.uncovered_fraction);
            out.csv(
                "coverage.csv",
                &["tree_id", "tree", "hits"],
                rep.trees.iter().zip(&rep.hits).enumerate().map(|(i, (t, h))| vec![i.to_string(), t.clone(), h.to_string()]),
            )?;
            out.json("coverage.json", &rep)?;
        }
        Ok(None)
    }
}

// partition

#[derive(Debug, Args, Serialize)]
pub struct PartitionArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c_sep: Option<f64>,
    #[arg(long)]
    pub c_comp: Option<f64>,
    #[arg(long)]
    pub c_dist: Option<f64>,
    #[arg(long)]
    pub trunc: Option<i64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol_sum: Option<f64>,
    #[arg(long)]
    pub tol_identity: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub n: usize,
    pub c_sep: f64,
    pub c_comp: f64,
    pub c_dist: f64,
    pub trunc: i64,
    pub samples: usize,
    pub seed: u64,
    pub tol_sum: f64,
    pub tol_identity: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            n: 3,
            c_sep: 4.0,
            c_comp: 4.0,
            c_dist: 4.0,
            trunc: 8,
            samples: 10_000,
            seed: 1,
            tol_sum: 1e-6,
            tol_identity: 1e-12,
        }
    }
}

impl Experiment for PartitionConfig {
    const NAME: &'static str = "partition";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let rp = region(self.c_sep, self.c_comp, self.c_dist)?;
        let count = enumerate_trees(self.n)?.len();
        let order: Vec<usize> = (0..count).collect();
        let t = telescope(self.n, &order, &rp, self.trunc)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (mut sum_err, mut id_err): (f64, f64) = (0.0, 0.0);
        let mut rows = vec![];
        for i in 0..self.samples {
            let xi = sample_simplex(self.n, &mut rng);
            let c = t.check(&xi);
            sum_err = sum_err.max((c.sum - 1.0).abs());
            id_err = id_err.max(c.identity_error).max(c.recursion_error);
            let mut row = vec![i.to_string()];
            row.extend(xi.iter().map(|&x| num(x)));
            row.extend([num(c.sum), num(c.last_remainder), num(c.identity_error), num(c.recursion_error)]);
            rows.push(row);
        }
        let names: Vec<String> = (1..=self.n).map(|j| format!("xi_{j}")).collect();
        let mut header = vec!["sample"];
        header.extend(names.iter().map(String::as_str));
        header.extend(["sum", "last_remainder", "identity_error", "recursion_error"]);
        out.csv("partition.csv", &header, rows)?;
        let ok = sum_err < self.tol_sum && id_err < self.tol_identity;
        say!("max |sum - 1| {sum_err:e}, telescope identity {id_err:e}: {}", mark(ok));
        Ok(Some(ok))
    }
}

// apply

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OpKind {
    Simplex,
    Maximal,
    BhtKernel,
    BhtSymbol,
    T3Kernel,
    T3tildeKernel,
    T3Symbol,
    T3tildeSymbol,
}

#[derive(Debug, Args, Serialize)]
pub struct ApplyArgs {
    #[arg(long, value_enum)]
    pub op: Option<OpKind>,
    /// Arity of the simplex operator.
    #[arg(long)]
    pub arity: Option<usize>,
    /// Sign pattern for the simplex operator, e.g. `1,-1,1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Option<Vec<i8>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Option<Vec<f64>>,
    /// Grid size N.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApplyConfig {
    pub op: OpKind,
    pub arity: usize,
    pub signs: Option<Vec<i8>>,
    pub alpha: Option<Vec<f64>>,
    pub grid: usize,
    pub period: f64,
    pub band: usize,
    pub seed: u64,
}

impl Default for ApplyConfig {
    fn default() -> Self {
        Self { op: OpKind::Simplex, arity: 2, signs: None, alpha: None, grid: 1024, period: 1.0, band: 16, seed: 1 }
    }
}

impl Experiment for ApplyConfig {
    const NAME: &'static str = "apply";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let arity = match self.op {
            OpKind::Simplex | OpKind::Maximal => self.arity,
            OpKind::BhtKernel | OpKind::BhtSymbol => 2,
            _ => 3,
        };
        let fs: Vec<GridFunction> = (0..arity as u64)
            .map(|j| bandlimited(self.band, self.seed + j, self.grid, self.period))
            .collect::<Result<_, _>>()?;
        let spec = SimplexOpSpec {
            n: arity,
            signs: self.signs.clone().unwrap_or_else(|| vec![1; arity]),
            alpha: self.alpha.clone(),
            maximal: self.op == OpKind::Maximal,
        };
        let variant = |op| if op == OpKind::T3Kernel || op == OpKind::T3Symbol { T3Variant::Plus } else { T3Variant::Minus };
        let mut band_limited = true;
        let result = match self.op {
            OpKind::Simplex => simplex_apply(&spec, &fs)?,
            OpKind::Maximal => maximal_apply(&spec, &fs)?,
            OpKind::BhtSymbol => bht_symbol_apply(&fs[0], &fs[1])?,
            OpKind::T3Symbol | OpKind::T3tildeSymbol => t3_symbol_apply(&fs[0], &fs[1], &fs[2], variant(self.op))?,
            OpKind::BhtKernel => {
                let k = bht_kernel(&fs[0], &fs[1])?;
                band_limited = k.band_limited;
                k.output
            }
            OpKind::T3Kernel | OpKind::T3tildeKernel => {
                let k = t3_kernel(&fs[0], &fs[1], &fs[2], variant(self.op))?;
                band_limited = k.band_limited;
                k.output
            }
        };
        let p = 2.0 / arity as f64;
        let denom: f64 = fs.iter().map(|f| f.l2_norm()).product();
        let ratio = lp_quasinorm(&result, p)? / denom;
        say!("output L2 {}, L^{p} quasinorm ratio {ratio}", result.l2_norm());
        if !band_limited {
            say!("warning: inputs carry energy above N/4; kernel discretization is not reliable");
        }
        out.csv("output.csv", &["m", "x", "re", "im"], samples_rows(&result))?;
        out.json("output.json", &result.to_json())?;
        out.json("summary.json", &serde_json::json!({ "l2": result.l2_norm(), "p": p, "ratio": ratio, "band_limited": band_limited }))?;
        Ok(None)
    }
}

// norm-scan

#[derive(Debug, Args, Serialize)]
pub struct NormScanArgs {
    #[arg(long)]
    pub arity: Option<usize>,
    /// Grid sizes, e.g. `1024,8192`.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub period: Option<f64>,
    /// Allowed relative change of the ensemble maximum between the first and last size.
    #[arg(long)]
    pub tol_change: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormScanCmd {
    pub arity: usize,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub band: usize,
    pub seed: u64,
    pub period: f64,
    pub tol_change: f64,
}

impl Default for NormScanCmd {
    fn default() -> Self {
        let d = NormScanConfig::default();
        Self { arity: d.arity, sizes: d.sizes, trials: d.ensemble, band: d.band, seed: d.seed, period: d.period, tol_change: 0.10 }
    }
}

impl Experiment for NormScanCmd {
    const NAME: &'static str = "norm-scan";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let cfg = NormScanConfig {
            arity: self.arity,
            sizes: self.sizes.clone(),
            ensemble: self.trials,
            band: self.band,
            seed: self.seed,
            period: self.period,
        };
        let rows = norm_scan(&cfg)?;
        out.csv(
            "norm_scan.csv",
            &["n", "max_ratio", "mean_ratio"],
            rows.iter().map(|r| vec![r.n.to_string(), num(r.max_ratio), num(r.mean_ratio)]),
        )?;
        let pts = |f: fn(&simplex_lab::experiments::NormScanRow) -> f64| {
            rows.iter().map(|r| ((r.n as f64).log2(), f(r))).collect::<Vec<_>>()
        };
        out.svg(
            "norm_scan.svg",
            &Plot {
                title: format!("Hoelder ratio, n = {}", self.arity),
                x_label: "log2 N".into(),
                y_label: "ratio".into(),
                series: vec![Series::new("max", pts(|r| r.max_ratio)), Series::new("mean", pts(|r| r.mean_ratio))],
            },
        )?;
        let (first, last) = match (rows.first(), rows.last()) {
            (Some(a), Some(b)) => (a.max_ratio, b.max_ratio),
            _ => return Err(Failure::Config("sizes must not be empty".into())),
        };
        let change = (last - first).abs() / first;
        let ok = change < self.tol_change;
        for r in &rows {
            say!("N {:>6}  max {:.6}  mean {:.6}", r.n, r.max_ratio, r.mean_ratio);
        }
        say!("relative change {change:.4}: {}", mark(ok));
        Ok(Some(ok))
    }
}

// chirp

#[derive(Debug, Args, Serialize)]
pub struct ChirpArgs {
    /// Grid size; windows run over powers of two up to it.
    #[arg(long = "Nmax")]
    #[serde(rename = "Nmax")]
    pub nmax: Option<usize>,
    /// Smallest window.
    #[arg(long)]
    pub wmin: Option<usize>,
    #[arg(long)]
    pub tol_r2: Option<f64>,
    #[arg(long)]
    pub tol_spread: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChirpCmd {
    #[serde(rename = "Nmax")]
    pub nmax: usize,
    pub wmin: usize,
    pub tol_r2: f64,
    pub tol_spread: f64,
}

impl Default for ChirpCmd {
    fn default() -> Self {
        Self { nmax: 4096, wmin: 16, tol_r2: 0.95, tol_spread: 2.0 }
    }
}

impl Experiment for ChirpCmd {
    const NAME: &'static str = "chirp";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        if self.wmin == 0 || !self.wmin.is_power_of_two() || self.wmin > self.nmax {
            return Err(Failure::Config(format!("wmin = {} must be a power of two in 1..=Nmax", self.wmin)));
        }
        let windows: Vec<usize> = std::iter::successors(Some(self.wmin), |w| Some(w * 2)).take_while(|&w| w <= self.nmax).collect();
        let sweep = chirp_sweep(&ChirpConfig { n: self.nmax, windows })?;
        out.csv(
            "chirp.csv",
            &["window", "quasinorm_ratio_t3", "quasinorm_ratio_t3tilde"],
            sweep.rows.iter().map(|r| vec![r.window.to_string(), num(r.ratio_t3), num(r.ratio_t3tilde)]),
        )?;
        let fit = sweep.tilde_fit;
        let xs: Vec<f64> = sweep.rows.iter().map(|r| (r.window as f64).log2()).collect();
        out.svg(
            "chirp.svg",
            &Plot {
                title: format!("Chirp sweep, N = {}", sweep.n),
                x_label: "log2 W".into(),
                y_label: "quasinorm ratio".into(),
                series: vec![
                    Series::new("T3", xs.iter().zip(&sweep.rows).map(|(&x, r)| (x, r.ratio_t3)).collect()),
                    Series::new("T3 tilde", xs.iter().zip(&sweep.rows).map(|(&x, r)| (x, r.ratio_t3tilde)).collect()),
                    Series::new(
                        &format!("fit slope {:.3}, R2 {:.3}", fit.slope, fit.r2),
                        xs.iter().map(|&x| (x, fit.slope * x + fit.intercept)).collect(),
                    )
                    .dashed(),
                ],
            },
        )?;
        out.json("chirp.json", &sweep)?;
        let grows = fit.r2 >= self.tol_r2 && fit.slope > 0.0;
        let bounded = sweep.t3_spread <= self.tol_spread;
        say!("T3 tilde: slope {:.4} per octave, R2 {:.4}: {}", fit.slope, fit.r2, mark(grows));
        say!("T3: max/min {:.4}: {}", sweep.t3_spread, mark(bounded));
        Ok(Some(grows && bounded))
    }
}

// tiles

#[derive(Debug, Args, Serialize)]
pub struct TilesArgs {
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub scale_step: Option<i32>,
    #[arg(long)]
    pub gap: Option<i64>,
    #[arg(long)]
    pub rank1_constant: Option<f64>,
    /// Also apply the model operator of the star tree to random inputs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub model: Option<bool>,
    #[arg(long)]
    pub alpha_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TilesCmd {
    pub levels: usize,
    pub dim: usize,
    pub scale_step: i32,
    pub gap: i64,
    pub rank1_constant: f64,
    pub model: bool,
    pub alpha_samples: usize,
    pub seed: u64,
}

impl Default for TilesCmd {
    fn default() -> Self {
        let d = LacunaryConfig::default();
        Self {
            levels: d.levels,
            dim: d.dim,
            scale_step: d.scale_step,
            gap: d.gap,
            rank1_constant: d.rank1_constant,
            model: false,
            alpha_samples: 1,
            seed: 1,
        }
    }
}

impl Experiment for TilesCmd {
    const NAME: &'static str = "tiles";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let fam = lacunary_family(&LacunaryConfig {
            levels: self.levels,
            dim: self.dim,
            scale_step: self.scale_step,
            gap: self.gap,
            rank1_constant: self.rank1_constant,
            ..LacunaryConfig::default()
        })?;
        let rep = rank1_check(&fam)?;
        let mut rows = vec![];
        for (id, t) in fam.tiles.iter().enumerate() {
            let (a, b) = t.time.endpoints();
            for (i, w) in t.freqs.iter().enumerate() {
                let (l, r) = w.endpoints_f64();
                rows.push(vec![id.to_string(), a.to_string(), b.to_string(), (i + 1).to_string(), num(l), num(r)]);
            }
        }
        out.csv("tiles.csv", &["tile_id", "time_left", "time_right", "component", "freq_left", "freq_right"], rows)?;
        out.json("rank1.json", &rep)?;
        say!("{} vector tiles, rank-1 {}, sparse {}, {} violations", fam.len(), rep.ok, rep.sparse, rep.violations.len());
        if self.model {
            let g = RootedTree::star(self.dim - 1)?;
            let host = HostGrid::for_tiles(&fam.tiles)?;
            let fs: Vec<GridFunction> = (0..self.dim as u64 - 1)
                .map(|j| bandlimited(host.n / 2 - 1, self.seed + j, host.n, host.period))
                .collect::<Result<_, _>>()?;
            let result = model_apply(&g, &HashMap::from([(g.root(), fam.clone())]), &fs, self.alpha_samples)?;
            say!("model operator on N = {}, L = {}: output L2 {}", host.n, host.period, result.l2_norm());
            out.csv("model.csv", &["m", "x", "re", "im"], samples_rows(&result))?;
        }
        Ok(Some(rep.ok))
    }
}

// audit

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Recompute the constants and write them to `constants.json` in the output directory.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub calibrate: Option<bool>,
    /// Factor applied to observed maxima when calibrating.
    #[arg(long)]
    pub margin: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditCmd {
    /// Defaults to the acceptance seed, or to the recorded seed of the bundled
    /// constants when calibrating.
    pub seed: Option<u64>,
    pub trials: usize,
    pub calibrate: bool,
    pub margin: f64,
}

impl Default for AuditCmd {
    fn default() -> Self {
        Self { seed: None, trials: 100, calibrate: false, margin: 2.0 }
    }
}

impl Experiment for AuditCmd {
    const NAME: &'static str = "audit";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        if self.calibrate {
            let k = audit::calibrate(self.seed.unwrap_or(AuditConstants::frozen().seed), self.margin)?;
            out.json("constants.json", &k)?;
            say!("calibrated constants written to {}", out.dir().join("constants.json").display());
            return Ok(None);
        }
        let k = AuditConstants::load()?;
        let (s, t) = (self.seed.unwrap_or(ACCEPTANCE_SEED), self.trials);
        let jn_tiles = [8usize, 16, 32, 64];
        let mut jn = audit::Range { min: f64::INFINITY, max: f64::NEG_INFINITY };
        for tiles in jn_tiles {
            let r = audit::jn_ensemble(s + tiles as u64, (2 * t).div_ceil(jn_tiles.len()), tiles)?;
            jn = audit::Range { min: jn.min.min(r.min), max: jn.max.max(r.max) };
        }
        let cal = audit::calibration_ensemble(s, t)?;
        let t16 = audit::tool_ensemble(s, t, 16)?;
        let t64 = audit::tool_ensemble(s, t, 64)?;
        let strat = audit::strat_ensemble(s, t, 64);
        let checks = [
            ("jn", jn, k.c_jn, jn.min >= 1.0 / k.c_jn && jn.max <= k.c_jn),
            ("energy", cal, k.c_cal, cal.max <= k.c_cal),
            ("tool_16", t16, k.c_tool, t16.max <= k.c_tool),
            ("tool_64", t64, k.c_tool, t64.max <= k.c_tool && t64.max / t16.max <= 2.0),
        ];
        let strat_ok = strat.is_ok();
        let mut rows: Vec<Vec<String>> =
            checks.iter().map(|(n, r, c, ok)| vec![n.to_string(), num(r.min), num(r.max), num(*c), ok.to_string()]).collect();
        let (smin, smax) = strat.as_ref().map_or((f64::NAN, f64::NAN), |r| (r.min, r.max));
        rows.push(vec!["stratify".into(), num(smin), num(smax), num(k.c_strat), strat_ok.to_string()]);
        for r in &rows {
            say!("{:<9} [{}, {}] vs {}: {}", r[0], r[1], r[2], r[3], if r[4] == "true" { "pass" } else { "fail" });
        }
        if let Err(e) = &strat {
            say!("stratify: {e}");
        }
        out.csv("audit.csv", &["check", "min", "max", "constant", "pass"], rows)?;
        Ok(Some(checks.iter().all(|c| c.3) && strat_ok))
    }
}

// bessel

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum KindArg {
    Standard,
    Relaxed,
}

#[derive(Debug, Args, Serialize)]
pub struct BesselArgs {
    #[arg(long)]
    pub k1: Option<i32>,
    /// Separations, e.g. `4,5,6,7,8,9`.
    #[arg(long, value_delimiter = ',')]
    pub k2: Option<Vec<i32>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Packet smoothness for standard packets.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub tol_slope: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BesselCmd {
    pub k1: i32,
    pub k2: Vec<i32>,
    pub trials: usize,
    pub seed: u64,
    pub kind: KindArg,
    pub order: u32,
    pub tol_slope: f64,
}

impl Default for BesselCmd {
    fn default() -> Self {
        let d = DelicateConfig::default();
        Self { k1: d.k1, k2: d.k2, trials: d.trials, seed: d.seed, kind: KindArg::Standard, order: DEFAULT_PACKET_ORDER, tol_slope: -1.0 }
    }
}

impl Experiment for BesselCmd {
    const NAME: &'static str = "bessel";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let kind = match self.kind {
            KindArg::Standard => PacketKind::Standard { order: self.order },
            KindArg::Relaxed => PacketKind::Relaxed,
        };
        let rep = delicate_decay_probe(&DelicateConfig { k1: self.k1, k2: self.k2.clone(), trials: self.trials, seed: self.seed, kind })?;
        out.csv(
            "bessel.csv",
            &["k2", "mean_abs_sum", "log2_mean_abs_sum"],
            rep.rows.iter().map(|&(k, v)| vec![k.to_string(), num(v), num(v.log2())]),
        )?;
        let pts: Vec<(f64, f64)> = rep.rows.iter().map(|&(k, v)| (k as f64, v.log2())).collect();
        let mut series = vec![Series::new("log2 |sum|", pts.clone())];
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().filter(|p| p.1.is_finite()).cloned().unzip();
        if let Ok(fit) = linear_fit(&xs, &ys) {
            series.push(Series::new(&format!("fit slope {:.3}", fit.slope), xs.iter().map(|&x| (x, fit.slope * x + fit.intercept)).collect()).dashed());
        }
        out.svg(
            "bessel.svg",
            &Plot { title: format!("Bessel sum decay, k1 = {}", self.k1), x_label: "k2".into(), y_label: "log2 |sum|".into(), series },
        )?;
        let ok = rep.slope <= self.tol_slope;
        for (k, v) in &rep.rows {
            say!("k2 {k:>2}  |sum| {v:e}");
        }
        say!("slope {:.4}: {}", rep.slope, mark(ok));
        Ok(Some(ok))
    }
}

// akns

#[derive(Debug, Args, Serialize)]
pub struct AknsArgs {
    /// Grid size of the potential.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub band: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `d₁,d₂`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub d: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Number of λ values.
    #[arg(long)]
    pub lambdas: Option<usize>,
    /// Initial value of `v₂` as `re,im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Option<Vec<f64>>,
    /// Initial value of `v₁` as `re,im`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c_tilde: Option<Vec<f64>>,
    #[arg(long)]
    pub tol_ratio: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AknsCmd {
    pub grid: usize,
    pub period: f64,
    pub band: usize,
    pub seed: u64,
    pub d: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambdas: usize,
    pub c: Vec<f64>,
    pub c_tilde: Vec<f64>,
    pub tol_ratio: f64,
}

impl Default for AknsCmd {
    fn default() -> Self {
        Self {
            grid: 1024,
            period: 32.0,
            band: 16,
            seed: 1,
            d: vec![0.5, -1.5],
            lambda_min: 0.37,
            lambda_max: 11.84,
            lambdas: 32,
            c: vec![0.8, 0.3],
            c_tilde: vec![-0.2, 0.1],
            tol_ratio: 1.0 + 1e-6,
        }
    }
}

fn complex(v: &[f64], name: &str) -> Result<C64, Failure> {
    match v {
        [re, im] => Ok(C64::new(*re, *im)),
        _ => Err(Failure::Config(format!("{name} must be re,im"))),
    }
}

impl Experiment for AknsCmd {
    const NAME: &'static str = "akns";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let d = match self.d[..] {
            [a, b] => (a, b),
            _ => return Err(Failure::Config("d must have two entries".into())),
        };
        if self.lambdas < 2 {
            return Err(Error::Domain("need at least two lambdas".into()).into());
        }
        let lambdas: Vec<f64> = (0..self.lambdas)
            .map(|i| self.lambda_min + (self.lambda_max - self.lambda_min) * i as f64 / (self.lambdas - 1) as f64)
            .collect();
        let f = bandlimited(self.band, self.seed, self.grid, self.period)?;
        let rows = akns::carleson_bound_check(&f, d, &lambdas, complex(&self.c, "c")?, complex(&self.c_tilde, "c_tilde")?)?;
        out.csv(
            "akns.csv",
            &["lambda", "snapped", "snap_error", "shift", "sup_v1", "carleson", "bound", "ratio"],
            rows.iter().map(|r| {
                vec![num(r.lambda), num(r.snapped), num(r.snap_error), r.shift.to_string(), num(r.sup_v1), num(r.carleson), num(r.bound), num(r.ratio)]
            }),
        )?;
        out.svg(
            "akns.svg",
            &Plot {
                title: "sup |v1| against the Carleson bound".into(),
                x_label: "lambda".into(),
                y_label: "ratio".into(),
                series: vec![Series::new("ratio", rows.iter().map(|r| (r.snapped, r.ratio)).collect())],
            },
        )?;
        let worst = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let ok = worst <= self.tol_ratio;
        say!("{} lambdas, max ratio {worst:.8}: {}", rows.len(), mark(ok));
        Ok(Some(ok))
    }
}

// selfcheck

#[derive(Debug, Args, Serialize)]
pub struct SelfcheckArgs {
    /// Run a single criterion.
    #[arg(long)]
    pub only: Option<u8>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfcheckCmd {
    pub only: Option<u8>,
}

impl Experiment for SelfcheckCmd {
    const NAME: &'static str = "selfcheck";

    fn run(&self, out: &mut Artifacts) -> Result<Verdict, Failure> {
        let ids: Vec<u8> = CRITERIA.iter().map(|c| c.0).filter(|&i| self.only.is_none_or(|o| o == i)).collect();
        if ids.is_empty() {
            return Err(Failure::Config(format!("no criterion {}", self.only.unwrap_or(0))));
        }
        let mut results = vec![];
        for id in ids {
            let r = run_criterion(id)?;
            say!("{}", r.line());
            results.push(r);
        }
        out.json("selfcheck.json", &results)?;
        out.csv(
            "selfcheck.csv",
            &["criterion", "name", "pass", "seconds", "budget", "detail"],
            results.iter().map(|r| vec![r.id.to_string(), r.name.into(), r.pass.to_string(), format!("{:.3}", r.seconds), num(r.budget), r.detail.clone()]),
        )?;
        if let Some(e) = results.iter().find_map(|r| r.error.clone().filter(|e| matches!(e, Error::NumericGuard(_)))) {
            return Err(e.into());
        }
        let passed = results.iter().filter(|r| r.pass).count();
        say!("{passed} of {} criteria pass", results.len());
        Ok(Some(passed == results.len()))
    }
}
