//! Shifted dyadic intervals `2^j(k + (0,1) + (-1)^j α)`, `α ∈ {0, 1/3, 2/3}`,
//! quasi-cubes built from them, and exact predicates on both.
//!
//! All geometry is computed with arbitrary-precision rationals. Every finite
//! `f64` is a dyadic rational, so user-supplied reals are converted exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite float.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    Rat::from_float(x).ok_or_else(|| Error::Domain(format!("{x} is not finite")))
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// `2^j` as an exact rational.
pub fn pow2(j: i32) -> Rat {
    let p = BigInt::one() << j.unsigned_abs();
    if j >= 0 {
        Rat::from_integer(p)
    } else {
        Rat::new(BigInt::one(), p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShiftedDyadicInterval {
    pub j: i32,
    pub k: i64,
    pub alpha_index: u8,
}

impl ShiftedDyadicInterval {
    pub fn new(j: i32, k: i64, alpha_index: u8) -> Result<Self> {
        if alpha_index > 2 {
            return Err(Error::Domain(format!("alpha_index {alpha_index} not in {{0,1,2}}")));
        }
        Ok(Self { j, k, alpha_index })
    }

    fn signed_alpha(&self) -> i64 {
        let a = self.alpha_index as i64;
        if self.j.rem_euclid(2) == 0 {
            a
        } else {
            -a
        }
    }

    pub fn endpoints(&self) -> (Rat, Rat) {
        let left = pow2(self.j) * rat(3 * self.k + self.signed_alpha(), 3);
        let right = &left + pow2(self.j);
        (left, right)
    }

    pub fn length(&self) -> Rat {
        pow2(self.j)
    }

    pub fn endpoints_f64(&self) -> (f64, f64) {
        let (a, b) = self.endpoints();
        (rat_to_f64(&a), rat_to_f64(&b))
    }
}

/// Closed axis-aligned box with rational corners; one `(lo, hi)` per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RBox(pub Vec<(Rat, Rat)>);

impl RBox {
    pub fn from_f64(sides: &[(f64, f64)]) -> Result<Self> {
        sides
            .iter()
            .map(|&(a, b)| Ok((rat_from_f64(a)?, rat_from_f64(b)?)))
            .collect::<Result<Vec<_>>>()
            .map(RBox)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains_box(&self, inner: &RBox) -> bool {
        self.dim() == inner.dim()
            && self.0.iter().zip(&inner.0).all(|((a, b), (c, d))| a <= c && d <= b)
    }

    /// Dilation about the center by `factor` on every axis.
    pub fn dilate(&self, factor: &Rat) -> RBox {
        let half = rat(1, 2);
        RBox(
            self.0
                .iter()
                .map(|(a, b)| {
                    let c = (a + b) * &half;
                    let r = (b - a) * &half * factor;
                    (&c - &r, &c + &r)
                })
                .collect(),
        )
    }

    pub fn volume(&self) -> Rat {
        self.0.iter().fold(Rat::one(), |acc, (a, b)| acc * (b - a))
    }

    /// Open interiors intersect.
    pub fn interiors_meet(&self, other: &RBox) -> bool {
        self.0.iter().zip(&other.0).all(|((a, b), (c, d))| a.max(c) < b.min(d))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<ShiftedDyadicInterval>", into = "Vec<ShiftedDyadicInterval>")]
pub struct QuasiCube {
    components: Vec<ShiftedDyadicInterval>,
}

impl TryFrom<Vec<ShiftedDyadicInterval>> for QuasiCube {
    type Error = Error;
    fn try_from(v: Vec<ShiftedDyadicInterval>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QuasiCube> for Vec<ShiftedDyadicInterval> {
    fn from(q: QuasiCube) -> Self {
        q.components
    }
}

impl QuasiCube {
    pub fn new(components: Vec<ShiftedDyadicInterval>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Domain("a quasi-cube needs at least one component".into()));
        }
        let jmin = components.iter().map(|c| c.j).min().unwrap_or(0);
        let jmax = components.iter().map(|c| c.j).max().unwrap_or(0);
        if jmax - jmin > 1 {
            return Err(Error::Geometry(format!(
                "component lengths 2^{jmin} and 2^{jmax} differ by more than a factor 2"
            )));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[ShiftedDyadicInterval] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `l(Q)`: length of the first component.
    pub fn l(&self) -> Rat {
        self.components[0].length()
    }

    pub fn to_box(&self) -> RBox {
        RBox(self.components.iter().map(|c| c.endpoints()).collect())
    }

    pub fn center_f64(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                let (a, b) = c.endpoints_f64();
                0.5 * (a + b)
            })
            .collect()
    }
}

pub fn shrink(q: &QuasiCube, fraction: &Rat) -> Result<RBox> {
    if !(fraction.is_positive() && *fraction <= Rat::one()) {
        return Err(Error::Domain(format!("shrink fraction {fraction} not in (0, 1]")));
    }
    Ok(q.to_box().dilate(fraction))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionParams {
    pub c_sep: f64,
    pub c_comp: f64,
    pub c_dist: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self { c_sep: 16.0, c_comp: 4.0, c_dist: 4.0 }
    }
}

impl RegionParams {
    pub fn new(c_sep: f64, c_comp: f64, c_dist: f64) -> Result<Self> {
        let rp = Self { c_sep, c_comp, c_dist };
        rp.validate()?;
        Ok(rp)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c_sep", self.c_sep), ("c_comp", self.c_comp), ("c_dist", self.c_dist)] {
            if !(v.is_finite() && v > 1.0) {
                return Err(Error::Domain(format!("{name} = {v} must be finite and > 1")));
            }
        }
        Ok(())
    }

    /// `A ≪ B`.
    pub fn much_less(&self, a: f64, b: f64) -> bool {
        self.c_sep * a <= b
    }

    /// `A ∼ B`.
    pub fn comparable(&self, a: f64, b: f64) -> bool {
        a <= self.c_comp * b && b <= self.c_comp * a
    }
}

fn ceil_rat(x: &Rat) -> i64 {
    use num_traits::ToPrimitive;
    x.ceil().to_integer().to_i64().expect("position fits in i64")
}

fn floor_rat(x: &Rat) -> i64 {
    use num_traits::ToPrimitive;
    x.floor().to_integer().to_i64().expect("position fits in i64")
}

/// Smallest `(k, α)` at scale `j` with `[a, b] ⊆ 7/10·I`, if any.
fn cover_interval_at(j: i32, a: &Rat, b: &Rat) -> Option<ShiftedDyadicInterval> {
    let len = pow2(j);
    // I = [t, t + len]; 7/10·I = [t + 3/20·len, t + 17/20·len].
    let lo = b - &len * rat(17, 20);
    let hi = a - &len * rat(3, 20);
    if lo > hi {
        return None;
    }
    let mut best: Option<ShiftedDyadicInterval> = None;
    for alpha_index in 0..3u8 {
        let probe = ShiftedDyadicInterval { j, k: 0, alpha_index };
        let shift = rat(probe.signed_alpha(), 3);
        // t = len·(k + shift) ∈ [lo, hi]
        let kmin = ceil_rat(&(&lo / &len - &shift));
        let kmax = floor_rat(&(&hi / &len - &shift));
        if kmin <= kmax {
            let cand = ShiftedDyadicInterval { j, k: kmin, alpha_index };
            if best.map_or(true, |b| (cand.k, cand.alpha_index) < (b.k, b.alpha_index)) {
                best = Some(cand);
            }
        }
    }
    best
}

/// Quasi-cube `Q` with `target ⊆ (7/10)·Q`, all components at the smallest
/// admissible common scale, ties broken by smallest `k` then `α` per axis.
pub fn cover_cube(target: &RBox) -> Result<QuasiCube> {
    if target.dim() == 0 {
        return Err(Error::Domain("empty target".into()));
    }
    let sides: Vec<Rat> = target.0.iter().map(|(a, b)| b - a).collect();
    if sides.iter().any(|s| !s.is_positive()) {
        return Err(Error::Precondition("target has a degenerate side".into()));
    }
    let smax = sides.iter().max().cloned().unwrap_or_else(Rat::zero);
    let smin = sides.iter().min().cloned().unwrap_or_else(Rat::zero);
    if smax > &smin * rat_int(2) {
        return Err(Error::Precondition("target side ratio exceeds 2".into()));
    }
    // Need 7/10·2^j ≥ smax.
    let mut j = 0i32;
    let need = &smax * rat(10, 7);
    while pow2(j) < need {
        j += 1;
    }
    while pow2(j - 1) >= need {
        j -= 1;
    }
    for jj in j..j + 4 {
        let comps: Option<Vec<_>> =
            target.0.iter().map(|(a, b)| cover_interval_at(jj, a, b)).collect();
        if let Some(c) = comps {
            return QuasiCube::new(c);
        }
    }
    Err(Error::Geometry("no covering quasi-cube at the scanned scales".into()))
}

/// `Q` adapted to `R_a`: each consecutive coordinate pair lies in
/// `a_j x_j < a_{j+1} x_{j+1}` at distance in `[c·diam, 100c·diam]` from the
/// boundary line.
pub fn is_adapted(q: &QuasiCube, a: &[f64], rp: &RegionParams) -> Result<bool> {
    if a.len() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: a.len() });
    }
    if a.len() < 2 {
        return Err(Error::Domain("adaptedness needs d >= 2".into()));
    }
    if a.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::Domain("coefficients must be finite and positive".into()));
    }
    rp.validate()?;
    let ar: Vec<Rat> = a.iter().map(|&x| rat_from_f64(x)).collect::<Result<_>>()?;
    let c = rat_from_f64(rp.c_dist)?;
    let c2 = &c * &c;
    let hundred2 = rat_int(10_000);
    let b = q.to_box();
    for i in 0..a.len() - 1 {
        let (x0, x1) = &b.0[i];
        let (y0, y1) = &b.0[i + 1];
        // min over the box of a_{i+1}·y − a_i·x
        let gmin = &ar[i + 1] * y0 - &ar[i] * x1;
        if !gmin.is_positive() {
            return Ok(false);
        }
        let norm2 = &ar[i] * &ar[i] + &ar[i + 1] * &ar[i + 1];
        let diam2 = (x1 - x0) * (x1 - x0) + (y1 - y0) * (y1 - y0);
        // dist² = gmin²/norm2 compared with c²·diam² and 10⁴c²·diam².
        let lhs = &gmin * &gmin;
        let low = &c2 * &diam2 * &norm2;
        if lhs < low || lhs > &low * &hundred2 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn is_sparse(cubes: &[QuasiCube], c: f64) -> Result<bool> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::Domain(format!("sparseness constant {c} must exceed 1")));
    }
    let cr = rat_from_f64(c)?;
    let boxes: Vec<RBox> = cubes.iter().map(|q| q.to_box()).collect();
    let vols: Vec<Rat> = boxes.iter().map(|b| b.volume()).collect();
    let dil: Vec<RBox> = boxes.iter().map(|b| b.dilate(&cr)).collect();
    for i in 0..cubes.len() {
        for j in 0..cubes.len() {
            if i == j {
                continue;
            }
            if vols[i] < vols[j] {
                if dil[i].volume() >= vols[j] {
                    return Ok(false);
                }
            } else if vols[i] == vols[j] && dil[i].interiors_meet(&dil[j]) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sdi(j: i32, k: i64, a: u8) -> ShiftedDyadicInterval {
        ShiftedDyadicInterval::new(j, k, a).unwrap()
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(sdi(0, 0, 0).endpoints(), (rat_int(0), rat_int(1)));
        assert_eq!(sdi(1, 0, 1).endpoints(), (rat(-2, 3), rat(4, 3)));
        assert_eq!(sdi(-2, 5, 0).endpoints(), (rat(5, 4), rat(6, 4)));
    }

    #[test]
    fn shrink_examples() {
        let q = QuasiCube::new(vec![sdi(0, 0, 0)]).unwrap();
        assert_eq!(shrink(&q, &rat(1, 2)).unwrap().0[0], (rat(1, 4), rat(3, 4)));
        assert_eq!(shrink(&q, &rat_int(1)).unwrap(), q.to_box());
        let q = QuasiCube::new(vec![sdi(1, 0, 1)]).unwrap();
        // center 1/3, half-length 7/10
        assert_eq!(shrink(&q, &rat(7, 10)).unwrap().0[0], (rat(-11, 30), rat(31, 30)));
    }

    #[test]
    fn quasi_cube_comparability() {
        assert!(QuasiCube::new(vec![sdi(0, 0, 0), sdi(1, 0, 0)]).is_ok());
        assert!(QuasiCube::new(vec![sdi(0, 0, 0), sdi(2, 0, 0)]).is_err());
    }

    #[test]
    fn cover_small_interval() {
        let t = RBox::from_f64(&[(0.1, 0.2)]).unwrap();
        let q = cover_cube(&t).unwrap();
        assert!(shrink(&q, &rat(7, 10)).unwrap().contains_box(&t));
        assert!(q.l() <= rat(4, 5));
        assert!(cover_cube(&RBox::from_f64(&[(0.0, 1.0), (0.0, 2.5)]).unwrap()).is_err());
    }

    #[test]
    fn adapted_examples() {
        let rp = RegionParams::new(16.0, 4.0, 1.0 + 1e-12).unwrap();
        let rp1 = rp;
        let q = QuasiCube::new(vec![sdi(0, 0, 0), sdi(0, 4, 0)]).unwrap();
        // dist to x = y is 3/√2 and diam is √2, ratio 3/2.
        assert!(is_adapted(&q, &[1.0, 1.0], &rp1).unwrap());
        let rp2 = RegionParams { c_dist: 1.5, ..rp };
        assert!(is_adapted(&q, &[1.0, 1.0], &rp2).unwrap());
        let rp3 = RegionParams { c_dist: 1.5 + 1e-9, ..rp };
        assert!(!is_adapted(&q, &[1.0, 1.0], &rp3).unwrap());

        let straddle = QuasiCube::new(vec![sdi(0, 0, 0), sdi(0, 0, 1)]).unwrap();
        assert!(!is_adapted(&straddle, &[1.0, 1.0], &rp1).unwrap());
        let unit = QuasiCube::new(vec![sdi(0, 0, 0), sdi(0, 0, 0)]).unwrap();
        assert!(!is_adapted(&unit, &[1.0, 2.0], &rp1).unwrap());
        assert!(matches!(
            is_adapted(&unit, &[1.0, 2.0, 3.0], &rp1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sparse_examples() {
        let c = 3.0;
        let a = QuasiCube::new(vec![sdi(0, 0, 0)]).unwrap();
        let far = QuasiCube::new(vec![sdi(0, 30, 0)]).unwrap();
        assert!(is_sparse(&[a.clone(), far], c).unwrap());
        assert!(!is_sparse(&[a.clone(), a.clone()], c).unwrap());
        let big = QuasiCube::new(vec![sdi(1, 40, 0)]).unwrap();
        assert!(!is_sparse(&[a, big], 10.0).unwrap());
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(sdi(1, -3, 2)).unwrap();
        assert_eq!(v, serde_json::json!({"j": 1, "k": -3, "alpha_index": 2}));
        let q = QuasiCube::new(vec![sdi(0, 0, 0), sdi(0, 1, 1)]).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<QuasiCube>(&s).unwrap(), q);
    }
}
