use num_complex::Complex64 as C64;
use proptest::prelude::*;
use simplex_lab::grid::*;

const EXPONENTS: [f64; 5] = [0.5, 2.0 / 3.0, 1.0, 2.0, f64::INFINITY];

#[test]
fn parseval_on_random_bandlimited() {
    for seed in 0..100u64 {
        let n = [64usize, 128, 256, 1024][seed as usize % 4];
        let band = 1 + (seed as usize * 7) % (n / 2 - 1);
        let period = 0.5 + seed as f64 / 10.0;
        let f = GridFunction::from_preset(&Preset::RandomBandlimited { band, seed }, n, period).unwrap();
        let time: f64 = f.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * f.step();
        let freq: f64 = dft(&f).coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>() * period;
        assert!((time - freq).abs() <= 1e-10 * time, "seed {seed}: {time} vs {freq}");
    }
}

#[test]
fn presets_are_bit_reproducible() {
    let presets = [
        Preset::PureMode { k: -5 },
        Preset::Chirp { sign: -1 },
        Preset::Gaussian { center: 0.3, width: 0.1, modulation: 4.0 },
        Preset::Indicator { a: 0.25, b: 0.5 },
        Preset::RandomBandlimited { band: 20, seed: 99 },
    ];
    for p in &presets {
        let a = GridFunction::from_preset(p, 256, 1.0).unwrap();
        let b = GridFunction::from_preset(p, 256, 1.0).unwrap();
        assert_eq!(a.to_le_bytes(), b.to_le_bytes(), "{p:?}");
    }
}

proptest! {
    #[test]
    fn quasinorm_monotone_in_modulus(
        g in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 64),
        shrink in prop::collection::vec((0.0f64..=1.0, 0.0f64..std::f64::consts::TAU), 64),
        period in 0.1f64..10.0,
    ) {
        let g: Vec<C64> = g.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let f: Vec<C64> = g.iter().zip(&shrink).map(|(z, &(r, t))| z * C64::from_polar(r, t)).collect();
        for p in EXPONENTS {
            let nf = lp_quasinorm_samples(&f, period, p).unwrap();
            let ng = lp_quasinorm_samples(&g, period, p).unwrap();
            prop_assert!(nf <= ng * (1.0 + 1e-12), "p = {}: {} > {}", p, nf, ng);
        }
    }

    #[test]
    fn round_trip_is_identity(band in 1usize..31, seed in any::<u64>()) {
        let f = GridFunction::from_preset(&Preset::RandomBandlimited { band, seed }, 64, 2.0).unwrap();
        let g = idft(&dft(&f));
        for (a, b) in f.samples().iter().zip(g.samples()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
