mod common;

use proptest::prelude::*;
use radiomap::cr::{cr_map_fast, cr_map_naive, CrParams};
use radiomap::QuantizedImage;

use common::{cr_oracle, random_image, rng, tied_image};

fn params(radius: usize, count: usize, exclude: usize) -> CrParams {
    CrParams {
        radius,
        count,
        exclude,
    }
}

fn image_strategy() -> impl Strategy<Value = QuantizedImage> {
    (1usize..20, 1usize..20).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h)
            .prop_map(move |v| QuantizedImage::new(w, h, v).unwrap())
    })
}

fn params_strategy() -> impl Strategy<Value = CrParams> {
    (1usize..4).prop_flat_map(|radius| {
        let n = (2 * radius + 1).pow(2);
        (1..=n).prop_flat_map(move |count| {
            (0..=n - count).prop_map(move |exclude| params(radius, count, exclude))
        })
    })
}

#[test]
fn naive_matches_sorting_oracle() {
    let mut r = rng(11);
    for (w, h) in [(1, 1), (3, 7), (16, 9)] {
        let img = random_image(&mut r, w, h);
        for p in [
            params(2, 15, 5),
            params(2, 10, 3),
            params(1, 9, 0),
            params(3, 1, 48),
        ] {
            let map = cr_map_naive(&img, &p).unwrap();
            for y in 0..h {
                for x in 0..w {
                    assert_eq!(
                        map.get(x, y),
                        cr_oracle(&img, x, y, p.radius, p.count, p.exclude),
                        "{p:?} at ({x},{y})"
                    );
                }
            }
        }
    }
}

#[test]
fn fast_equals_naive_on_ties() {
    let mut r = rng(12);
    for distinct in [1u8, 2, 3, 7] {
        let img = tied_image(&mut r, 23, 17, distinct);
        for p in [params(2, 15, 5), params(2, 10, 3), params(4, 30, 20)] {
            assert_eq!(
                cr_map_fast(&img, &p).unwrap(),
                cr_map_naive(&img, &p).unwrap()
            );
        }
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let img = random_image(&mut rng(13), 97, 61);
    let p = CrParams::default();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| cr_map_fast(&img, &p).unwrap());
    let b = four.install(|| cr_map_fast(&img, &p).unwrap());
    let bits =
        |m: &radiomap::FeatureMap| m.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fast_equals_naive(img in image_strategy(), p in params_strategy()) {
        prop_assert_eq!(cr_map_fast(&img, &p).unwrap(), cr_map_naive(&img, &p).unwrap());
    }

    #[test]
    fn bounded_by_count_times_extremes(img in image_strategy(), p in params_strategy()) {
        let map = cr_map_fast(&img, &p).unwrap();
        let lo = *img.levels().iter().min().unwrap() as f64;
        let hi = *img.levels().iter().max().unwrap() as f64;
        let c = p.count as f64;
        for &v in map.values() {
            prop_assert!(v >= c * lo && v <= c * hi);
        }
    }

    #[test]
    fn monotone_under_pointwise_increase(
        img in image_strategy(),
        p in params_strategy(),
        bumps in prop::collection::vec(any::<u8>(), 400),
    ) {
        let raised: Vec<u8> = img
            .levels()
            .iter()
            .zip(bumps.iter().cycle())
            .map(|(&v, &b)| v.saturating_add(b % 8))
            .collect();
        let raised = QuantizedImage::new(img.width(), img.height(), raised).unwrap();
        let a = cr_map_fast(&img, &p).unwrap();
        let b = cr_map_fast(&raised, &p).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn constant_image_gives_count_times_level(
        w in 1usize..12, h in 1usize..12, c in any::<u8>(), p in params_strategy()
    ) {
        let img = QuantizedImage::constant(w, h, c).unwrap();
        let map = cr_map_fast(&img, &p).unwrap();
        prop_assert!(map.values().iter().all(|&v| v == p.count as f64 * c as f64));
    }

    #[test]
    fn interior_is_translation_equivariant(seed in any::<u64>(), sx in 0usize..4, sy in 0usize..4) {
        // Shifting the image content moves interior outputs by the same amount.
        let (w, h) = (24, 20);
        let big = random_image(&mut rng(seed), w + sx, h + sy);
        let crop = |ox: usize, oy: usize| {
            let v = (0..h)
                .flat_map(|y| (0..w).map(move |x| (x + ox, y + oy)))
                .map(|(x, y)| big.get(x, y))
                .collect();
            QuantizedImage::new(w, h, v).unwrap()
        };
        let p = CrParams::default();
        let a = cr_map_fast(&crop(0, 0), &p).unwrap();
        let b = cr_map_fast(&crop(sx, sy), &p).unwrap();
        let r = p.radius;
        for y in r + sy..h - r {
            for x in r + sx..w - r {
                prop_assert_eq!(a.get(x, y), b.get(x - sx, y - sy));
            }
        }
    }
}
