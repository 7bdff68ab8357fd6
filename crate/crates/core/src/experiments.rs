//! Numerical experiments on the simplex operators: Hölder-ratio scans over
//! grid sizes, the chirp sweep comparing `T₃` with `T̃₃`, and the same
//! windows fed to the bilinear maximal operator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{lp_quasinorm, truncate, GridFunction, Preset};
use crate::ops::{hoelder_ratio, maximal_apply, t3_symbol_apply, SimplexOpSpec, T3Variant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares line `y = slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::Domain("need at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Indeterminate("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormScanConfig {
    pub arity: usize,
    pub sizes: Vec<usize>,
    pub ensemble: usize,
    pub band: usize,
    pub seed: u64,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_period() -> f64 {
    1.0
}

impl Default for NormScanConfig {
    fn default() -> Self {
        Self { arity: 2, sizes: vec![1 << 10, 1 << 13], ensemble: 100, band: 16, seed: 1, period: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormScanRow {
    pub n: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Ensemble of `‖T_n(f⃗)‖_{2/n} / Π‖f_j‖₂` over random band-limited inputs;
/// the same continuous inputs are resampled at each grid size.
pub fn norm_scan(cfg: &NormScanConfig) -> Result<Vec<NormScanRow>> {
    if cfg.arity == 0 || cfg.ensemble == 0 {
        return Err(Error::Domain("arity and ensemble must be positive".into()));
    }
    let spec = SimplexOpSpec::plain(cfg.arity);
    let p = 2.0 / cfg.arity as f64;
    cfg.sizes
        .iter()
        .map(|&n| {
            let mut max: f64 = 0.0;
            let mut sum = 0.0;
            for e in 0..cfg.ensemble {
                let fs: Vec<GridFunction> = (0..cfg.arity)
                    .map(|j| {
                        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((e * cfg.arity + j) as u64);
                        GridFunction::from_preset(&Preset::RandomBandlimited { band: cfg.band, seed }, n, cfg.period)
                    })
                    .collect::<Result<_>>()?;
                let r = hoelder_ratio(&spec, &fs, p)?;
                max = max.max(r);
                sum += r;
            }
            Ok(NormScanRow { n, max_ratio: max, mean_ratio: sum / cfg.ensemble as f64 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpConfig {
    pub n: usize,
    /// Window widths in samples.
    pub windows: Vec<usize>,
}

impl Default for ChirpConfig {
    fn default() -> Self {
        Self { n: 4096, windows: (4..=12).map(|e| 1usize << e).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpRow {
    pub window: usize,
    pub ratio_t3: f64,
    pub ratio_t3tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChirpSweep {
    pub n: usize,
    pub period: f64,
    pub rows: Vec<ChirpRow>,
    /// Fit of the `T̃₃` ratio against `log₂ W`.
    pub tilde_fit: LinearFit,
    /// `max/min` of the `T₃` ratio.
    pub t3_spread: f64,
}

impl ChirpSweep {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("window,quasinorm_ratio_t3,quasinorm_ratio_t3tilde\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e}\n", r.window, r.ratio_t3, r.ratio_t3tilde));
        }
        s
    }
}

/// Period at which `e^{i(x-L/2)²}` on `N` samples is the alias-free discrete
/// chirp `e^{iπ(m-N/2)²/N}`.
pub fn chirp_period(n: usize) -> f64 {
    (PI * n as f64).sqrt()
}

/// `f₁ = f₃ = chirp(+)`, `f₂ = chirp(-)` cut to centered windows of `W`
/// samples; ratios `‖T(f⃗)‖_{2/3} / Π‖f_j‖₂` for the sign-symbol forms of `T₃`
/// and `T̃₃`.
pub fn chirp_sweep(cfg: &ChirpConfig) -> Result<ChirpSweep> {
    let (period, windows) = chirp_windows(cfg)?;
    let mut rows = vec![];
    for (w, f1, f2) in windows {
        let denom: f64 = [&f1, &f2, &f1].iter().map(|f| f.l2_norm()).product();
        let t = t3_symbol_apply(&f1, &f2, &f1, T3Variant::Plus)?;
        let tt = t3_symbol_apply(&f1, &f2, &f1, T3Variant::Minus)?;
        rows.push(ChirpRow {
            window: w,
            ratio_t3: lp_quasinorm(&t, 2.0 / 3.0)? / denom,
            ratio_t3tilde: lp_quasinorm(&tt, 2.0 / 3.0)? / denom,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.window as f64).log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.ratio_t3tilde).collect();
    let tilde_fit = linear_fit(&xs, &ys)?;
    let lo = rows.iter().map(|r| r.ratio_t3).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.ratio_t3).fold(0.0, f64::max);
    Ok(ChirpSweep { n: cfg.n, period, rows, tilde_fit, t3_spread: hi / lo })
}

fn chirp_windows(cfg: &ChirpConfig) -> Result<(f64, Vec<(usize, GridFunction, GridFunction)>)> {
    let n = cfg.n;
    let period = chirp_period(n);
    let plus = GridFunction::from_preset(&Preset::Chirp { sign: 1 }, n, period)?;
    let minus = GridFunction::from_preset(&Preset::Chirp { sign: -1 }, n, period)?;
    let h = period / n as f64;
    let mut out = vec![];
    for &w in &cfg.windows {
        if w == 0 || w > n {
            return Err(Error::Domain(format!("window {w} must lie in 1..={n}")));
        }
        let a = (period / 2.0 - w as f64 * h / 2.0).max(0.0);
        let b = (period / 2.0 + w as f64 * h / 2.0).min(period);
        out.push((w, truncate(&plus, a, b)?, truncate(&minus, a, b)?));
    }
    Ok((period, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalChirpSweep {
    pub alpha: Vec<f64>,
    /// `(W, ‖M̃₂(f₁, f₂)‖₁ / ‖f₁‖₂‖f₂‖₂)`.
    pub rows: Vec<(usize, f64)>,
    /// Fit of the ratio against `log₂ W`.
    pub fit: LinearFit,
    pub max_ratio: f64,
}

/// `M̃₂` with phases `alpha` on `f₁ = chirp(+)`, `f₂ = chirp(-)` cut to the
/// windows of [`chirp_sweep`].
pub fn maximal_chirp_sweep(cfg: &ChirpConfig, alpha: &[f64]) -> Result<MaximalChirpSweep> {
    let spec = SimplexOpSpec::with_alpha(2, alpha.to_vec()).maximal();
    let (_, windows) = chirp_windows(cfg)?;
    let mut rows = vec![];
    for (w, f1, f2) in windows {
        let m = maximal_apply(&spec, &[f1.clone(), f2.clone()])?;
        rows.push((w, lp_quasinorm(&m, 1.0)? / (f1.l2_norm() * f2.l2_norm())));
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.0 as f64).log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let fit = linear_fit(&xs, &ys)?;
    let max_ratio = ys.iter().cloned().fold(0.0, f64::max);
    Ok(MaximalChirpSweep { alpha: alpha.to_vec(), rows, fit, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn chirp_period_gives_discrete_chirp() {
        let n = 64;
        let f = GridFunction::from_preset(&Preset::Chirp { sign: 1 }, n, chirp_period(n)).unwrap();
        for (m, v) in f.samples().iter().enumerate() {
            let j = m as f64 - n as f64 / 2.0;
            let want = num_complex::Complex64::from_polar(1.0, PI * j * j / n as f64);
            assert!((v - want).norm() < 1e-9);
        }
    }

    #[test]
    fn small_norm_scan_is_stable() {
        let cfg = NormScanConfig { arity: 2, sizes: vec![64, 256], ensemble: 5, band: 8, seed: 3, period: 1.0 };
        let rows = norm_scan(&cfg).unwrap();
        assert!((rows[0].max_ratio / rows[1].max_ratio - 1.0).abs() < 0.1);
    }
}
