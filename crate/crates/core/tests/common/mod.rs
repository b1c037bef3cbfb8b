//! Shared generators and brute-force oracles for the integration tests.
//! The oracles deliberately avoid the crate's own helpers.
#![allow(dead_code)]

use std::collections::HashMap;

use radiomap::QuantizedImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, width: usize, height: usize) -> QuantizedImage {
    let levels = (0..width * height).map(|_| rng.gen::<u8>()).collect();
    QuantizedImage::new(width, height, levels).unwrap()
}

/// Few distinct levels, so windows are full of ties.
pub fn tied_image(rng: &mut impl Rng, width: usize, height: usize, distinct: u8) -> QuantizedImage {
    let levels = (0..width * height)
        .map(|_| rng.gen_range(0..distinct).wrapping_mul(37))
        .collect();
    QuantizedImage::new(width, height, levels).unwrap()
}

/// Mirror with edge repetition: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
pub fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

pub fn pixel(img: &QuantizedImage, x: isize, y: isize) -> u8 {
    img.get(mirror(x, img.width()), mirror(y, img.height()))
}

/// Sum of the `count` window values just below the `exclude` largest.
pub fn cr_oracle(
    img: &QuantizedImage,
    x: usize,
    y: usize,
    radius: usize,
    count: usize,
    exclude: usize,
) -> f64 {
    let r = radius as isize;
    let mut window: Vec<u32> = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            window.push(pixel(img, x as isize + dx, y as isize + dy) as u32);
        }
    }
    window.sort_unstable_by(|a, b| b.cmp(a));
    window[exclude..exclude + count].iter().sum::<u32>() as f64
}

/// Co-occurrence counts of a window, both orders of every in-window pair.
pub fn glcm_oracle(
    img: &QuantizedImage,
    x: usize,
    y: usize,
    radius: usize,
    offsets: &[(isize, isize)],
) -> HashMap<(u8, u8), u64> {
    let r = radius as isize;
    let mut counts = HashMap::new();
    for wy in -r..=r {
        for wx in -r..=r {
            for &(dx, dy) in offsets {
                let (nx, ny) = (wx + dx, wy + dy);
                if nx < -r || nx > r || ny < -r || ny > r {
                    continue;
                }
                let a = pixel(img, x as isize + wx, y as isize + wy);
                let b = pixel(img, x as isize + nx, y as isize + ny);
                *counts.entry((a, b)).or_insert(0) += 1;
                *counts.entry((b, a)).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// (dx, dy) for 0°, 45°, 90°, 135° with rows growing downward.
pub fn default_offsets(distances: &[usize]) -> Vec<(isize, isize)> {
    let mut out = Vec::new();
    for &d in distances {
        let d = d as isize;
        out.extend([(d, 0), (d, -d), (0, -d), (-d, -d)]);
    }
    out
}

pub fn renyi_oracle(counts: &HashMap<(u8, u8), u64>, alpha: f64) -> f64 {
    let total: u64 = counts.values().sum();
    let s: f64 = counts
        .values()
        .map(|&c| (c as f64 / total as f64).powf(alpha))
        .sum();
    s.ln() / (1.0 - alpha)
}

/// Wilcoxon p-value by listing all 2^n sign flips of the nonzero
/// differences, with average ranks for ties.
pub fn wilcoxon_enumerate(diffs: &[f64], two_sided: bool) -> (f64, f64) {
    let d: Vec<f64> = diffs.iter().copied().filter(|&v| v != 0.0).collect();
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].abs().partial_cmp(&d[b].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    let w_obs: f64 = (0..n).filter(|&k| d[k] > 0.0).map(|k| ranks[k]).sum();
    let total = (1u64 << n) as f64;
    let (mut le, mut ge) = (0u64, 0u64);
    for mask in 0u64..(1u64 << n) {
        let w: f64 = (0..n)
            .filter(|&k| mask >> k & 1 == 1)
            .map(|k| ranks[k])
            .sum();
        if w <= w_obs + 1e-9 {
            le += 1;
        }
        if w >= w_obs - 1e-9 {
            ge += 1;
        }
    }
    let upper = ge as f64 / total;
    let lower = le as f64 / total;
    let p = if two_sided {
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        upper
    };
    (w_obs, p)
}

pub fn relative_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
