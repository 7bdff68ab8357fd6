use num_bigint::BigInt;
use num_traits::One;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simplex_lab::dyadic::*;

#[test]
fn endpoints_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100_000 {
        let j = rng.gen_range(-40..40);
        let k = rng.gen_range(-1i64 << 40..1i64 << 40);
        let a = rng.gen_range(0..3u8);
        let (left, right) = ShiftedDyadicInterval::new(j, k, a).unwrap().endpoints();
        let q = rat_int(3) * &left / pow2(j);
        assert!(q.is_integer(), "j {j} k {k} a {a}");
        assert_eq!(right - left, pow2(j));
    }
}

/// Every `(k, α)` at scale `j` whose `7/10` dilate holds `[a, b]`, by scanning
/// all intervals that meet it.
fn covers_at(j: i32, a: &Rat, b: &Rat) -> Vec<ShiftedDyadicInterval> {
    let len = pow2(j);
    let lo = (a / &len).floor().to_integer() - BigInt::from(2);
    let hi = (b / &len).ceil().to_integer() + BigInt::from(2);
    let (lo, hi): (i64, i64) = (lo.try_into().unwrap(), hi.try_into().unwrap());
    let seven = rat(7, 10);
    let mut out = vec![];
    for k in lo..=hi {
        for alpha in 0..3u8 {
            let s = ShiftedDyadicInterval::new(j, k, alpha).unwrap();
            let q = QuasiCube::new(vec![s]).unwrap();
            if shrink(&q, &seven).unwrap().contains_box(&RBox(vec![(a.clone(), b.clone())])) {
                out.push(s);
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn cover_cube_matches_scan(
        d in 1usize..=3,
        e in -8i32..=4,
        raw in prop::collection::vec((0u32..1024, 0u32..1024, -4096i64..4096), 3),
    ) {
        // sides in [2^e, 2^{e+1}) so every ratio is below 2
        let unit = pow2(e);
        let sides: Vec<(Rat, Rat)> = raw[..d]
            .iter()
            .map(|&(s, _, c)| {
                let side = &unit * (Rat::one() + rat(s as i64, 1024));
                let left = &unit * rat(c, 64);
                (left.clone(), left + side)
            })
            .collect();
        let target = RBox(sides);
        let q = cover_cube(&target).unwrap();
        prop_assert!(shrink(&q, &rat(7, 10)).unwrap().contains_box(&target));
        let j = q.components()[0].j;
        prop_assert!(q.components().iter().all(|c| c.j == j));
        // no smaller common scale works, and per axis the pick is the least (k, α)
        let smaller = (j - 6..j).any(|jj| target.0.iter().all(|(a, b)| !covers_at(jj, a, b).is_empty()));
        prop_assert!(!smaller);
        for ((a, b), c) in target.0.iter().zip(q.components()) {
            let all = covers_at(j, a, b);
            let least = all.iter().min_by_key(|s| (s.k, s.alpha_index)).unwrap();
            prop_assert_eq!(least, c);
        }
    }

    #[test]
    fn sparseness_ignores_order(seed in any::<u64>(), count in 1usize..7, c in 1.5f64..12.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cubes: Vec<QuasiCube> = (0..count)
            .map(|_| {
                let j = rng.gen_range(-1..2);
                QuasiCube::new(
                    (0..2)
                        .map(|_| ShiftedDyadicInterval::new(j, rng.gen_range(-12..12), rng.gen_range(0..3)).unwrap())
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let before = is_sparse(&cubes, c).unwrap();
        cubes.shuffle(&mut rng);
        prop_assert_eq!(before, is_sparse(&cubes, c).unwrap());
        cubes.reverse();
        prop_assert_eq!(before, is_sparse(&cubes, c).unwrap());
    }
}
