//! Random ensembles for the size/energy estimates and the frozen constants
//! they are checked against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Preset, C64};
use crate::size_energy::{
    bessel_sum, cp_normalize, CoeffSequence, energy, energy_l2_check, random_instance, size, size_jn, stratify, tool_check,
    verify_energy, verify_stratification, PacketKind,
};
use crate::tiles::{lacunary_family, HostGrid, LacunaryConfig, TileCollection, WavePacket, DEFAULT_PACKET_ORDER};

/// Overrides the bundled constants file.
pub const CONSTANTS_ENV: &str = "SIMPLEX_LAB_CONSTANTS";
const FROZEN: &str = include_str!("../data/constants.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConstants {
    pub version: u32,
    pub seed: u64,
    /// Factor applied to the observed maxima.
    pub margin: f64,
    pub c_jn: f64,
    pub c_cal: f64,
    pub c_tool: f64,
    pub c_bessel: f64,
    pub c_strat: f64,
}

impl AuditConstants {
    pub fn frozen() -> Self {
        serde_json::from_str(FROZEN).expect("bundled constants parse")
    }

    /// The file named by [`CONSTANTS_ENV`] if set, else the bundled values.
    pub fn load() -> Result<Self> {
        match std::env::var(CONSTANTS_ENV) {
            Ok(path) => {
                let s = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Serialization(format!("{path}: {e}")))?;
                serde_json::from_str(&s).map_err(|e| Error::Serialization(format!("{path}: {e}")))
            }
            Err(_) => Ok(Self::frozen()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        xs.into_iter().fold(Range { min: f64::INFINITY, max: f64::NEG_INFINITY }, |r, x| Range {
            min: r.min.min(x),
            max: r.max.max(x),
        })
    }
}

/// `size_jn / size` over random instances of `tiles` tiles.
pub fn jn_ensemble(seed: u64, count: usize, tiles: usize) -> Result<Range> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for _ in 0..count {
        let (c, s) = random_instance(&mut rng, tiles)?;
        out.push(size_jn(&c, &s[0])? / size(&c, &s[0])?.value);
    }
    Ok(Range::of(out))
}

/// `energy(⟨f, Φ_P⟩)/‖f‖₂` on the three-level lacunary family; `f` alternates
/// between random packet superpositions and random band-limited functions.
pub fn calibration_ensemble(seed: u64, count: usize) -> Result<Range> {
    let fam = lacunary_family(&LacunaryConfig { levels: 3, ..LacunaryConfig::default() })?;
    let host = HostGrid::for_tiles(&fam.tiles)?;
    let packets: Vec<GridFunction> = fam
        .tiles
        .iter()
        .map(|t| Ok(WavePacket::new(&t.component(0), DEFAULT_PACKET_ORDER, &host, 0.0)?.samples))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for e in 0..count {
        let f = if e % 2 == 0 {
            let mut acc = vec![C64::new(0.0, 0.0); host.n];
            for p in &packets {
                let b = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                for (a, v) in acc.iter_mut().zip(p.samples()) {
                    *a += b * v;
                }
            }
            GridFunction::new(acc, host.period)?
        } else {
            let band = rng.gen_range(1..host.n / 2);
            GridFunction::from_preset(&Preset::RandomBandlimited { band, seed: rng.gen() }, host.n, host.period)?
        };
        out.push(energy_l2_check(&fam, &f, 0, DEFAULT_PACKET_ORDER)?);
    }
    Ok(Range::of(out))
}

/// Tool ratios with exponents `(1/2, 1/2, 0)`.
pub fn tool_ensemble(seed: u64, count: usize, tiles: usize) -> Result<Range> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for _ in 0..count {
        let (c, s) = random_instance(&mut rng, tiles)?;
        out.push(tool_check(&c, &s, &[0.5, 0.5, 0.0])?.ratio);
    }
    Ok(Range::of(out))
}

/// Stratifies random instances, re-verifies every certificate and returns
/// the range of observed `C_strat`.
pub fn strat_ensemble(seed: u64, count: usize, tiles: usize) -> Result<Range> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for _ in 0..count {
        let (c, s) = random_instance(&mut rng, tiles)?;
        verify_energy(&c, &s[0], &energy(&c, &s[0])?)?;
        let st = stratify(&c, &s[0])?;
        verify_stratification(&c, &s[0], &st)?;
        out.push(st.c_strat);
    }
    Ok(Range::of(out))
}

/// `|bessel_sum|` with both sequences normalized on their energy trees.
pub fn bessel_ensemble(seed: u64, count: usize, tiles: usize, kind: PacketKind) -> Result<Range> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![];
    for _ in 0..count {
        let (c, s) = random_instance(&mut rng, tiles)?;
        let host = HostGrid::for_tiles(&c.tiles)?;
        // both sequences on slot 0 so the packets share frequencies
        let norm = |coll: &TileCollection, k: usize| {
            let seq = CoeffSequence::new(0, s[k].values.clone());
            let e = energy(coll, &seq)?;
            cp_normalize(coll, &seq, e.trees)
        };
        let (cp, cq) = (norm(&c, 0)?, norm(&c, 1)?);
        out.push(bessel_sum(&c, &c, &cp, &cq, &host, kind)?.norm());
    }
    Ok(Range::of(out))
}

/// Observed maxima times `margin`; the bundled file was produced by this with
/// the seed it records.
pub fn calibrate(seed: u64, margin: f64) -> Result<AuditConstants> {
    let std6 = PacketKind::Standard { order: DEFAULT_PACKET_ORDER };
    Ok(AuditConstants {
        version: 1,
        seed,
        margin,
        c_jn: 16.0,
        c_cal: margin * calibration_ensemble(seed, 100)?.max,
        c_tool: margin * tool_ensemble(seed, 100, 16)?.max.max(tool_ensemble(seed, 100, 64)?.max),
        c_bessel: margin * bessel_ensemble(seed, 20, 32, std6)?.max,
        c_strat: margin * strat_ensemble(seed, 100, 64)?.max,
    })
}
