use proptest::prelude::*;
use radiomap::preprocess::{minmax_normalize, prepare, quantize, resize, resize_mask, ResizeMode};
use radiomap::{BinaryMask, GrayImage};

fn image_strategy() -> impl Strategy<Value = GrayImage> {
    (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
        prop::collection::vec(-1e4f64..1e4, w * h)
            .prop_map(move |v| GrayImage::new(w, h, v).unwrap())
    })
}

proptest! {
    #[test]
    fn normalized_range_hits_both_ends(img in image_strategy()) {
        let n = minmax_normalize(&img);
        let lo = n.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = n.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let constant = img.values().iter().all(|&v| v == img.values()[0]);
        if constant {
            prop_assert!(n.values().iter().all(|&v| v == 0.0));
        } else {
            prop_assert_eq!((lo, hi), (0.0, 1.0));
        }
    }

    #[test]
    fn quantization_is_order_preserving(img in image_strategy()) {
        let q = prepare(&img);
        let v = img.values();
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(q.levels()[i] <= q.levels()[j]);
                }
            }
        }
    }

    #[test]
    fn prepare_ignores_positive_affine_rescaling(img in image_strategy(), a in 0.01f64..100.0, b in -1e3f64..1e3) {
        let scaled = GrayImage::new(
            img.width(),
            img.height(),
            img.values().iter().map(|&v| a * v + b).collect(),
        ).unwrap();
        let (p, q) = (prepare(&img), prepare(&scaled));
        for (x, y) in p.levels().iter().zip(q.levels()) {
            prop_assert!((*x as i32 - *y as i32).abs() <= 1);
        }
    }

    #[test]
    fn quantize_rounds_to_nearest_level(v in 0.0f64..=1.0) {
        let img = GrayImage::new(1, 1, vec![v]).unwrap();
        let level = quantize(&img).unwrap().levels()[0] as f64;
        prop_assert!((level - v * 255.0).abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn same_size_resize_is_identity(img in image_strategy()) {
        let (w, h) = img.dims();
        for mode in [ResizeMode::Nearest, ResizeMode::Bilinear] {
            let out = resize(&img, w, h, mode).unwrap();
            prop_assert_eq!(out.values(), img.values());
        }
    }

    #[test]
    fn integer_upscale_replicates_pixels(img in image_strategy(), k in 1usize..4) {
        let (w, h) = img.dims();
        let up = resize(&img, w * k, h * k, ResizeMode::Nearest).unwrap();
        for y in 0..h * k {
            for x in 0..w * k {
                prop_assert_eq!(up.get(x, y), img.get(x / k, y / k));
            }
        }
    }

    #[test]
    fn bilinear_stays_within_source_range(img in image_strategy(), w in 1usize..24, h in 1usize..24) {
        let lo = img.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = img.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let out = resize(&img, w, h, ResizeMode::Bilinear).unwrap();
        let slack = 1e-9 * (hi.abs() + lo.abs() + 1.0);
        for &v in out.values() {
            prop_assert!(v >= lo - slack && v <= hi + slack);
        }
    }

    #[test]
    fn mask_resize_matches_image_resize(w in 1usize..12, h in 1usize..12, bits in prop::collection::vec(any::<bool>(), 144), tw in 1usize..20, th in 1usize..20) {
        let mask = BinaryMask::new(w, h, bits[..w * h].to_vec()).unwrap();
        let a = resize_mask(&mask, tw, th).unwrap();
        let b = BinaryMask::from_image(&resize(&mask.to_image(), tw, th, ResizeMode::Nearest).unwrap());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn constant_slice_quantizes_to_zero() {
    let img = GrayImage::new(3, 2, vec![7.5; 6]).unwrap();
    assert!(prepare(&img).levels().iter().all(|&l| l == 0));
}
