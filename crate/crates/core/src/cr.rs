//! Concentration rate: for every pixel, the sum of the `count` largest gray
//! levels in its `(2r+1)²` window after discarding the `exclude` largest.
//!
//! With the window values sorted ascending as `X(1) <= ... <= X(N)`, the map
//! value is `X(N-count-exclude+1) + ... + X(N-exclude)`. Windows are
//! reflect-padded at the borders so the map keeps the image dimensions.
//!
//! [`cr_map_naive`] sorts every window and is the reference.
//! [`cr_map_fast`] slides a 256-bin histogram along each row and must agree
//! with it bit for bit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{FeatureMap, QuantizedImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CrParams {
    /// Window half-size; the window side is `2 * radius + 1`.
    pub radius: usize,
    /// Number of high-intensity pixels summed.
    pub count: usize,
    /// Number of highest pixels skipped before summing.
    pub exclude: usize,
}

impl Default for CrParams {
    fn default() -> Self {
        Self {
            radius: 2,
            count: 15,
            exclude: 5,
        }
    }
}

impl CrParams {
    pub fn window_len(&self) -> usize {
        let side = 2 * self.radius + 1;
        side * side
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius == 0 {
            return Err(Error::InvalidParams("CR radius must be >= 1".into()));
        }
        if self.count == 0 {
            return Err(Error::InvalidParams("CR count must be >= 1".into()));
        }
        let n = self.window_len();
        if self.count + self.exclude > n {
            return Err(Error::InvalidParams(format!(
                "CR count + exclude = {} exceeds window size {n}",
                self.count + self.exclude
            )));
        }
        Ok(())
    }
}

/// Reference implementation: gathers and sorts every window.
pub fn cr_map_naive(img: &QuantizedImage, params: &CrParams) -> Result<FeatureMap> {
    params.validate()?;
    let (w, h) = img.dims();
    let r = params.radius;
    let side = 2 * r + 1;
    let n = params.window_len();
    let padded = img.padded(r);
    let lo = n - params.count - params.exclude;
    let hi = n - params.exclude;
    let mut window = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            window.clear();
            for wy in y..y + side {
                for wx in x..x + side {
                    window.push(padded.at(wx, wy));
                }
            }
            window.sort_unstable();
            let sum: u32 = window[lo..hi].iter().map(|&v| u32::from(v)).sum();
            values.push(f64::from(sum));
        }
    }
    Ok(FeatureMap::from_parts(w, h, values))
}

const BLOCK: usize = 16;
const BLOCKS: usize = 256 / BLOCK;

/// Window histogram with per-block counts and value sums, so the trimmed
/// top-sum can take whole blocks at once.
struct RollingHistogram {
    bins: [u32; 256],
    block_counts: [u32; BLOCKS],
    block_sums: [u32; BLOCKS],
}

impl RollingHistogram {
    fn new() -> Self {
        Self {
            bins: [0; 256],
            block_counts: [0; BLOCKS],
            block_sums: [0; BLOCKS],
        }
    }

    #[inline]
    fn add(&mut self, v: u8) {
        let b = usize::from(v);
        self.bins[b] += 1;
        self.block_counts[b / BLOCK] += 1;
        self.block_sums[b / BLOCK] += u32::from(v);
    }

    #[inline]
    fn remove(&mut self, v: u8) {
        let b = usize::from(v);
        self.bins[b] -= 1;
        self.block_counts[b / BLOCK] -= 1;
        self.block_sums[b / BLOCK] -= u32::from(v);
    }

    /// Walks from level 255 down, skipping `exclude` values and summing the
    /// next `count`.
    fn trimmed_top_sum(&self, count: usize, exclude: usize) -> u32 {
        let mut skip = exclude as u32;
        let mut need = count as u32;
        let mut total = 0u32;
        for blk in (0..BLOCKS).rev() {
            let c = self.block_counts[blk];
            if c == 0 {
                continue;
            }
            if skip >= c {
                skip -= c;
                continue;
            }
            if skip == 0 && c <= need {
                total += self.block_sums[blk];
                need -= c;
                if need == 0 {
                    break;
                }
                continue;
            }
            for bin in (blk * BLOCK..(blk + 1) * BLOCK).rev() {
                let mut c = self.bins[bin];
                if c == 0 {
                    continue;
                }
                let skipped = c.min(skip);
                skip -= skipped;
                c -= skipped;
                let take = c.min(need);
                total += take * bin as u32;
                need -= take;
                if need == 0 {
                    break;
                }
            }
            if need == 0 {
                break;
            }
        }
        total
    }
}

/// Rolling-histogram implementation, parallel over rows. Output is identical
/// to [`cr_map_naive`] regardless of thread count.
pub fn cr_map_fast(img: &QuantizedImage, params: &CrParams) -> Result<FeatureMap> {
    params.validate()?;
    let (w, h) = img.dims();
    let r = params.radius;
    let side = 2 * r + 1;
    let padded = img.padded(r);
    let mut values = vec![0.0f64; w * h];
    values.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let mut hist = RollingHistogram::new();
        for wy in y..y + side {
            for wx in 0..side {
                hist.add(padded.at(wx, wy));
            }
        }
        for (x, out) in row.iter_mut().enumerate() {
            if x > 0 {
                let (gone, came) = (x - 1, x + side - 1);
                for wy in y..y + side {
                    hist.remove(padded.at(gone, wy));
                    hist.add(padded.at(came, wy));
                }
            }
            *out = f64::from(hist.trimmed_top_sum(params.count, params.exclude));
        }
    });
    Ok(FeatureMap::from_parts(w, h, values))
}
