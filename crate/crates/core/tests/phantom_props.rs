use proptest::prelude::*;
use radiomap::cr::{cr_map_fast, CrParams};
use radiomap::glcm::{re_map_fast, GlcmParams};
use radiomap::phantom::{feature_contrast, generate, Background, CounterRng, Lesion, PhantomSpec};
use radiomap::preprocess::prepare;
use radiomap::{BinaryMask, FeatureMap};

fn single(semi_axes: (f64, f64), angle: f64, noise_sd: f64, gradient: f64) -> PhantomSpec {
    PhantomSpec {
        width: 64,
        height: 48,
        background: Background {
            mean: 100.0,
            noise_sd,
        },
        gradient,
        lesions: vec![Lesion {
            center: (31.5, 23.5),
            semi_axes,
            angle,
            boost: 50.0,
        }],
        seed: 9,
    }
}

#[test]
fn noiseless_values_follow_construction() {
    let spec = single((10.0, 5.0), 0.0, 0.0, 12.0);
    let (img, mask) = generate(&spec).unwrap();
    for y in 0..48 {
        for x in 0..64 {
            let ramp = 12.0 * (x + y) as f64 / (63.0 + 47.0);
            let want = if mask.get(x, y) { 150.0 } else { 100.0 } + ramp;
            assert_eq!(img.get(x, y), want, "({x},{y})");
        }
    }
}

#[test]
fn reproducible_and_seed_sensitive() {
    let spec = PhantomSpec::default();
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a, b);
    let c = generate(&PhantomSpec { seed: 1, ..spec }).unwrap();
    assert_eq!(a.1, c.1);
    assert_ne!(a.0, c.0);
}

#[test]
fn gaussian_stream_moments() {
    let rng = CounterRng::new(2024);
    let n = 200_000;
    let xs: Vec<f64> = (0..n).map(|i| rng.gaussian(i)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    assert!(mean.abs() < 0.01, "{mean}");
    assert!((var - 1.0).abs() < 0.02, "{var}");
    assert!((0..n).all(|i| (0.0..=1.0).contains(&rng.uniform(i)) && rng.uniform(i) > 0.0));
}

#[test]
fn default_phantom_contrast() {
    let (img, mask) = generate(&PhantomSpec::default()).unwrap();
    let q = prepare(&img);
    let cr = cr_map_fast(&q, &CrParams::default()).unwrap();
    let re = re_map_fast(&q, &GlcmParams::default()).unwrap();
    let (ci, co) = feature_contrast(&mask, &cr).unwrap();
    let (ri, ro) = feature_contrast(&mask, &re).unwrap();
    assert!(ci > co, "cr {ci} vs {co}");
    assert!(ri > ro, "re {ri} vs {ro}");
}

#[test]
fn contrast_of_trivial_maps() {
    let (_, mask) = generate(&PhantomSpec::default()).unwrap();
    let (w, h) = mask.dims();
    let flat = FeatureMap::new(w, h, vec![3.0; w * h]).unwrap();
    assert_eq!(feature_contrast(&mask, &flat).unwrap(), (3.0, 3.0));
    let own = FeatureMap::from(mask.to_image());
    assert_eq!(feature_contrast(&mask, &own).unwrap(), (1.0, 0.0));
    let empty = BinaryMask::new(w, h, vec![false; w * h]).unwrap();
    assert!(feature_contrast(&empty, &flat).is_err());
}

#[test]
fn rejects_out_of_bounds_or_nonpositive_lesions() {
    let mut spec = single((10.0, 5.0), 0.0, 1.0, 0.0);
    spec.lesions[0].center = (2.0, 2.0);
    assert!(generate(&spec).is_err());
    let mut spec = single((10.0, 5.0), 0.0, 1.0, 0.0);
    spec.lesions[0].boost = 0.0;
    assert!(generate(&spec).is_err());
    let spec = single((10.0, 5.0), 0.0, -1.0, 0.0);
    assert!(generate(&spec).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mask_area_close_to_ellipse_area(a in 6.0f64..20.0, ratio in 0.4f64..1.0, angle in -90.0f64..90.0) {
        let b = a * ratio;
        let mut spec = single((a, b), angle, 0.0, 0.0);
        spec.width = 64;
        spec.height = 64;
        spec.lesions[0].center = (31.5, 31.5);
        let (_, mask) = generate(&spec).unwrap();
        let area = std::f64::consts::PI * a * b;
        prop_assert!((mask.count() as f64 - area).abs() <= 0.05 * area);
    }

    #[test]
    fn random_layouts_are_valid(seed in any::<u64>(), count in 1usize..5) {
        let bg = Background { mean: 100.0, noise_sd: 10.0 };
        let spec = PhantomSpec::with_random_lesions(96, 96, bg, count, 30.0, seed);
        prop_assert!(spec.validate().is_ok());
        let (_, mask) = generate(&spec).unwrap();
        prop_assert!(mask.count() > 0);
    }
}
