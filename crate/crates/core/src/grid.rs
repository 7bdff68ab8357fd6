//! Periodic sampled functions on `[0, L)` and their discrete spectra.
//!
//! A [`GridFunction`] holds samples at `x_m = L·m/N`. The forward transform is
//! the Riemann sum `(L/N) Σ_m f(x_m) e^{-2πi k x_m / L}` divided by `L`, so a
//! [`Spectrum`] stores Fourier-series coefficients and `pure_mode(k)` maps to a
//! unit coefficient at `k`. With this normalization
//! `Σ|f(x_m)|²·L/N = Σ|c_k|²·L`.
//!
//! Frequencies live on `[-N/2, N/2)`; the Nyquist bin is `-N/2`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place forward FFT, `X_k = Σ x_m e^{-2πi km/n}`.
pub fn fft_in_place(buf: &mut [C64]) {
    plan(buf.len(), false).process(buf);
}

/// Unnormalized in-place inverse FFT, `x_m = Σ X_k e^{2πi km/n}`.
pub fn ifft_in_place(buf: &mut [C64]) {
    plan(buf.len(), true).process(buf);
}

/// Signed frequency of FFT bin `i` on the symmetric range `[-n/2, n/2)`.
pub fn signed_freq(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i >= n / 2 {
        i - n
    } else {
        i
    }
}

/// FFT bin holding signed frequency `k`.
pub fn bin_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

pub fn check_grid_size(n: usize) -> Result<()> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::Construction(format!(
            "N = {n} must be a power of two with N >= 8"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Preset {
    PureMode { k: i64 },
    Chirp { sign: i8 },
    Gaussian { center: f64, width: f64, modulation: f64 },
    Indicator { a: f64, b: f64 },
    RandomBandlimited { band: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    samples: Vec<C64>,
    period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `coefficients[i]` is the coefficient of frequency `i - N/2`.
    coefficients: Vec<C64>,
    period: f64,
}

impl GridFunction {
    pub fn new(samples: Vec<C64>, period: f64) -> Result<Self> {
        check_grid_size(samples.len())?;
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Construction(format!("period {period} must be positive")));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Construction("non-finite sample".into()));
        }
        Ok(Self { samples, period })
    }

    pub fn from_fn(n: usize, period: f64, f: impl Fn(f64) -> C64) -> Result<Self> {
        check_grid_size(n)?;
        let h = period / n as f64;
        Self::new((0..n).map(|m| f(h * m as f64)).collect(), period)
    }

    pub fn zeros(n: usize, period: f64) -> Result<Self> {
        Self::new(vec![C64::new(0.0, 0.0); n], period)
    }

    pub fn constant(n: usize, period: f64, value: C64) -> Result<Self> {
        Self::new(vec![value; n], period)
    }

    pub fn from_preset(preset: &Preset, n: usize, period: f64) -> Result<Self> {
        check_grid_size(n)?;
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Construction(format!("period {period} must be positive")));
        }
        let h = period / n as f64;
        let xs = (0..n).map(|m| h * m as f64);
        let samples: Vec<C64> = match *preset {
            Preset::PureMode { k } => (0..n)
                .map(|m| {
                    let t = 2.0 * PI * ((k * m as i64).rem_euclid(n as i64)) as f64 / n as f64;
                    C64::from_polar(1.0, t)
                })
                .collect(),
            Preset::Chirp { sign } => {
                if sign != 1 && sign != -1 {
                    return Err(Error::Domain(format!("chirp sign {sign} must be +1 or -1")));
                }
                xs.map(|x| {
                    let y = x - period / 2.0;
                    C64::from_polar(1.0, sign as f64 * y * y)
                })
                .collect()
            }
            Preset::Gaussian { center, width, modulation } => {
                if !(width > 0.0) {
                    return Err(Error::Domain(format!("width {width} must be positive")));
                }
                xs.map(|x| {
                    let d = (x - center + period / 2.0).rem_euclid(period) - period / 2.0;
                    let amp = (-PI * (d / width).powi(2)).exp();
                    C64::from_polar(amp, 2.0 * PI * modulation * x / period)
                })
                .collect()
            }
            Preset::Indicator { a, b } => xs
                .map(|x| if x >= a && x < b { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
                .collect(),
            Preset::RandomBandlimited { band, seed } => {
                if band >= n / 2 {
                    return Err(Error::Aliasing { band, half: n / 2 });
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut coeffs = vec![C64::new(0.0, 0.0); n];
                for k in -(band as i64)..=(band as i64) {
                    coeffs[bin_of(k, n)] =
                        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
                ifft_in_place(&mut coeffs);
                coeffs
            }
        };
        Self::new(samples, period)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self) -> f64 {
        self.period / self.n() as f64
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn x(&self, m: usize) -> f64 {
        self.step() * m as f64
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self { samples: self.samples.iter().map(|&z| f(z)).collect(), period: self.period }
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|z| z * c)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
            period: self.period,
        })
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: other.n() });
        }
        if self.period != other.period {
            return Err(Error::Precondition(format!(
                "period mismatch: {} vs {}",
                self.period, other.period
            )));
        }
        Ok(())
    }

    /// `∫ f ḡ` approximated by the Riemann sum.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_compatible(other)?;
        let s: C64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.step())
    }

    pub fn l2_norm(&self) -> f64 {
        lp_quasinorm_samples(&self.samples, self.period, 2.0).unwrap_or(f64::NAN)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.n());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&self.period.to_le_bytes());
        for z in &self.samples {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes
                .get(8 * i..8 * i + 8)
                .map(|s| s.try_into().expect("slice of length 8"))
                .ok_or_else(|| Error::Serialization("truncated buffer".into()))
        };
        let n = u64::from_le_bytes(word(0)?) as usize;
        if bytes.len() != 16 + 16 * n {
            return Err(Error::Serialization(format!(
                "expected {} bytes for N = {n}, got {}",
                16 + 16 * n,
                bytes.len()
            )));
        }
        let period = f64::from_le_bytes(word(1)?);
        let samples = (0..n)
            .map(|m| {
                Ok(C64::new(
                    f64::from_le_bytes(word(2 + 2 * m)?),
                    f64::from_le_bytes(word(3 + 2 * m)?),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples, period)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n(),
            "period": self.period,
            "samples": self.samples.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            period: f64,
            samples: Vec<[f64; 2]>,
        }
        let raw: Raw = serde_json::from_value(v.clone())?;
        Self::new(raw.samples.iter().map(|&[re, im]| C64::new(re, im)).collect(), raw.period)
    }
}

impl Spectrum {
    pub fn new(coefficients: Vec<C64>, period: f64) -> Result<Self> {
        check_grid_size(coefficients.len())?;
        Ok(Self { coefficients, period })
    }

    pub fn n(&self) -> usize {
        self.coefficients.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Coefficients ordered by frequency `-N/2, …, N/2 - 1`.
    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn freqs(&self) -> impl Iterator<Item = i64> {
        let h = (self.n() / 2) as i64;
        -h..h
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let h = (self.n() / 2) as i64;
        if k < -h || k >= h {
            C64::new(0.0, 0.0)
        } else {
            self.coefficients[(k + h) as usize]
        }
    }

    /// Coefficients in FFT bin order.
    pub fn to_bins(&self) -> Vec<C64> {
        let n = self.n();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (i, k) in self.freqs().enumerate() {
            out[bin_of(k, n)] = self.coefficients[i];
        }
        out
    }

    pub fn from_bins(bins: &[C64], period: f64) -> Result<Self> {
        let n = bins.len();
        check_grid_size(n)?;
        let h = (n / 2) as i64;
        Self::new((-h..h).map(|k| bins[bin_of(k, n)]).collect(), period)
    }
}

pub fn dft(f: &GridFunction) -> Spectrum {
    let n = f.n();
    let mut buf = f.samples.clone();
    fft_in_place(&mut buf);
    let inv_n = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= inv_n);
    Spectrum::from_bins(&buf, f.period).expect("grid size already validated")
}

pub fn idft(s: &Spectrum) -> GridFunction {
    let mut buf = s.to_bins();
    ifft_in_place(&mut buf);
    GridFunction { samples: buf, period: s.period }
}

pub fn lp_quasinorm(f: &GridFunction, p: f64) -> Result<f64> {
    lp_quasinorm_samples(&f.samples, f.period, p)
}

/// `(Σ|f_m|^p · L/N)^{1/p}`, or the max modulus for `p = ∞`. Works on any length.
pub fn lp_quasinorm_samples(samples: &[C64], period: f64, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::Domain(format!("exponent p = {p} must be positive")));
    }
    if samples.is_empty() {
        return Ok(0.0);
    }
    if p.is_infinite() {
        return Ok(samples.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let h = period / samples.len() as f64;
    let s: f64 = samples.iter().map(|z| z.norm().powf(p)).sum();
    Ok((s * h).powf(1.0 / p))
}

/// Multiplies by the indicator of `[a, b)`.
pub fn truncate(f: &GridFunction, a: f64, b: f64) -> Result<GridFunction> {
    if !(b > a) {
        return Err(Error::Domain(format!("empty interval [{a}, {b})")));
    }
    if a < 0.0 || b > f.period {
        return Err(Error::Precondition(format!(
            "[{a}, {b}) is not inside [0, {})",
            f.period
        )));
    }
    let h = f.step();
    Ok(GridFunction {
        samples: f
            .samples
            .iter()
            .enumerate()
            .map(|(m, &z)| {
                let x = h * m as f64;
                if x >= a && x < b {
                    z
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect(),
        period: f.period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_dft(f: &GridFunction) -> Vec<(i64, C64)> {
        let n = f.n();
        let h = (n / 2) as i64;
        (-h..h)
            .map(|k| {
                let s: C64 = (0..n)
                    .map(|m| f.samples()[m] * C64::from_polar(1.0, -2.0 * PI * (k * m as i64) as f64 / n as f64))
                    .sum();
                (k, s / n as f64)
            })
            .collect()
    }

    #[test]
    fn pure_mode_samples_and_spectrum() {
        let f = GridFunction::from_preset(&Preset::PureMode { k: 3 }, 16, 1.0).unwrap();
        for m in 0..16 {
            let want = C64::from_polar(1.0, 2.0 * PI * 3.0 * m as f64 / 16.0);
            assert!((f.samples()[m] - want).norm() < 1e-14);
        }
        let s = dft(&f);
        for k in s.freqs() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((s.coeff(k) - want).norm() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn indicator_is_left_closed() {
        let f = GridFunction::from_preset(&Preset::Indicator { a: 0.0, b: 0.5 }, 8, 1.0).unwrap();
        let re: Vec<f64> = f.samples().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn boxcar_spectrum_matches_direct_sum() {
        let f = GridFunction::from_preset(&Preset::Indicator { a: 0.0, b: 0.5 }, 8, 1.0).unwrap();
        let s = dft(&f);
        for (k, want) in direct_dft(&f) {
            assert!((s.coeff(k) - want).norm() < 1e-14, "k = {k}");
        }
        assert!((s.coeff(0) - 0.5).norm() < 1e-15);
        assert!(s.coeff(2).norm() < 1e-15);
    }

    #[test]
    fn nyquist_is_negative() {
        let f = GridFunction::from_preset(&Preset::PureMode { k: 4 }, 8, 1.0).unwrap();
        let s = dft(&f);
        assert!((s.coeff(-4) - 1.0).norm() < 1e-14);
        assert_eq!(s.freqs().collect::<Vec<_>>(), (-4..4).collect::<Vec<_>>());
    }

    #[test]
    fn round_trip() {
        let f = GridFunction::from_preset(&Preset::RandomBandlimited { band: 20, seed: 5 }, 64, 2.0).unwrap();
        let g = idft(&dft(&f));
        let err: f64 = f.samples().iter().zip(g.samples()).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(err.sqrt() / f.l2_norm() < 1e-12);
    }

    #[test]
    fn chirp_spectrum_is_flat_in_stationary_phase_band() {
        // Phase x² has instantaneous mode k = L·x/π, so the band is |k| < L²/(2π).
        // Stationary phase predicts |c_k| ≈ √π / L there.
        let (n, l) = (1024usize, 32.0f64);
        let f = GridFunction::from_preset(&Preset::Chirp { sign: 1 }, n, l).unwrap();
        let direct = direct_dft(&f);
        let s = dft(&f);
        let edge = (l * l / (2.0 * PI)) as i64;
        let inner = edge * 3 / 4;
        let want = PI.sqrt() / l;
        for (k, c) in direct {
            assert!((s.coeff(k) - c).norm() < 1e-12);
            if k.abs() <= inner {
                assert!((c.norm() / want - 1.0).abs() < 0.35, "k = {k}, |c| = {}", c.norm());
            }
            if k.abs() > edge + 40 {
                assert!(c.norm() < 0.2 * want, "k = {k}");
            }
        }
    }

    #[test]
    fn quasinorm_examples() {
        let one = GridFunction::constant(8, 1.0, C64::new(1.0, 0.0)).unwrap();
        for p in [0.5, 2.0 / 3.0, 1.0, 2.0, f64::INFINITY] {
            assert!((lp_quasinorm(&one, p).unwrap() - 1.0).abs() < 1e-14);
        }
        let two = [C64::new(1.0, 0.0); 2];
        assert!((lp_quasinorm_samples(&two, 1.0, 2.0 / 3.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(lp_quasinorm(&one, 0.0).is_err());
        assert!(lp_quasinorm(&one, -1.0).is_err());
    }

    #[test]
    fn truncate_examples() {
        let one = GridFunction::constant(16, 1.0, C64::new(1.0, 0.0)).unwrap();
        let t = truncate(&one, 0.0, 0.5).unwrap();
        let ind = GridFunction::from_preset(&Preset::Indicator { a: 0.0, b: 0.5 }, 16, 1.0).unwrap();
        assert_eq!(t, ind);
        assert_eq!(truncate(&one, 0.0, 1.0).unwrap(), one);
        assert!(truncate(&one, 0.5, 0.5).is_err());

        let chirp = GridFunction::from_preset(&Preset::Chirp { sign: 1 }, 1024, 64.0).unwrap();
        let w = 16.0;
        let t = truncate(&chirp, 8.0, 8.0 + w).unwrap();
        assert!((t.l2_norm() - w.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn invalid_sizes_and_aliasing() {
        assert!(matches!(
            GridFunction::from_preset(&Preset::PureMode { k: 1 }, 12, 1.0),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            GridFunction::from_preset(&Preset::PureMode { k: 1 }, 4, 1.0),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            GridFunction::from_preset(&Preset::RandomBandlimited { band: 8, seed: 1 }, 16, 1.0),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn serialization_round_trips() {
        let f = GridFunction::from_preset(&Preset::Gaussian { center: 0.3, width: 0.1, modulation: 4.0 }, 32, 1.0).unwrap();
        assert_eq!(GridFunction::from_le_bytes(&f.to_le_bytes()).unwrap(), f);
        assert_eq!(GridFunction::from_json(&f.to_json()).unwrap(), f);
        assert!(GridFunction::from_le_bytes(&f.to_le_bytes()[..40]).is_err());
    }
}
