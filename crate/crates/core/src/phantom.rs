//! Synthetic FLAIR-like slices: a flat background with an optional smooth
//! ramp, bright elliptical lesions and Gaussian noise, plus the exact lesion
//! mask. Output depends only on the spec, seed included.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, FeatureMap, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub mean: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lesion {
    /// Centre `(x, y)` in pixel coordinates.
    pub center: (f64, f64),
    /// Semi-axes `(a, b)` in pixels, before rotation.
    pub semi_axes: (f64, f64),
    /// Counter-clockwise rotation in degrees.
    #[serde(default)]
    pub angle: f64,
    /// Intensity added inside the ellipse.
    pub boost: f64,
}

impl Lesion {
    /// Whether pixel centre `(x, y)` lies inside the ellipse.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle.to_radians().sin_cos();
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let u = (dx * c + dy * s) / self.semi_axes.0;
        let v = (-dx * s + dy * c) / self.semi_axes.1;
        u * u + v * v <= 1.0
    }

    /// Half-extents of the axis-aligned bounding box.
    fn half_extent(&self) -> (f64, f64) {
        let (s, c) = self.angle.to_radians().sin_cos();
        let (a, b) = self.semi_axes;
        (
            (a * a * c * c + b * b * s * s).sqrt(),
            (a * a * s * s + b * b * c * c).sqrt(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub background: Background,
    /// Amplitude of a linear ramp rising from the top-left to the
    /// bottom-right corner.
    #[serde(default)]
    pub gradient: f64,
    pub lesions: Vec<Lesion>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            background: Background {
                mean: 100.0,
                noise_sd: 10.0,
            },
            gradient: 20.0,
            lesions: vec![
                Lesion {
                    center: (40.0, 40.0),
                    semi_axes: (10.0, 6.0),
                    angle: 30.0,
                    boost: 50.0,
                },
                Lesion {
                    center: (88.0, 48.0),
                    semi_axes: (7.0, 7.0),
                    angle: 0.0,
                    boost: 40.0,
                },
                Lesion {
                    center: (64.0, 96.0),
                    semi_axes: (12.0, 5.0),
                    angle: -20.0,
                    boost: 45.0,
                },
            ],
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// A spec whose lesion layout is drawn from `seed`: `count` ellipses with
    /// semi-axes in `[4, 12)` pixels, random orientation and the given boost.
    pub fn with_random_lesions(
        width: usize,
        height: usize,
        background: Background,
        count: usize,
        boost: f64,
        seed: u64,
    ) -> Self {
        // layout draws come from a stream distinct from the noise stream
        let rng = CounterRng::new(seed ^ 0xA5A5_5A5A_C3C3_3C3C);
        let mut k = 0u64;
        let mut next = || {
            k += 1;
            rng.uniform(k)
        };
        let lesions = (0..count)
            .map(|_| {
                let a = 4.0 + 8.0 * next();
                let b = 4.0 + 8.0 * next();
                let reach = a.max(b) + 1.0;
                let span = |n: usize| (n as f64 - 1.0 - 2.0 * reach).max(0.0);
                Lesion {
                    center: (reach + span(width) * next(), reach + span(height) * next()),
                    semi_axes: (a, b),
                    angle: 180.0 * next(),
                    boost,
                }
            })
            .collect();
        Self {
            width,
            height,
            background,
            gradient: 0.0,
            lesions,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParams(
                "phantom dimensions must be >= 1".into(),
            ));
        }
        let bg = self.background;
        if !bg.mean.is_finite() || !self.gradient.is_finite() {
            return Err(Error::InvalidParams(
                "non-finite background or gradient".into(),
            ));
        }
        if !(bg.noise_sd.is_finite() && bg.noise_sd >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "noise sd {} < 0",
                bg.noise_sd
            )));
        }
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        for (i, l) in self.lesions.iter().enumerate() {
            if !(l.boost.is_finite() && l.boost > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "lesion {i}: boost must be > 0"
                )));
            }
            let (a, b) = l.semi_axes;
            if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && l.angle.is_finite()) {
                return Err(Error::InvalidParams(format!("lesion {i}: invalid shape")));
            }
            let (ex, ey) = l.half_extent();
            let (cx, cy) = l.center;
            if !(cx - ex >= 0.0 && cx + ex <= xmax && cy - ey >= 0.0 && cy + ey <= ymax) {
                return Err(Error::InvalidParams(format!(
                    "lesion {i} extends outside the {}x{} image",
                    self.width, self.height
                )));
            }
        }
        Ok(())
    }
}

/// Counter-based generator: the `k`-th 64-bit word is the SplitMix64 output
/// mix of `seed + (k + 1) * 0x9E3779B97F4A7C15`. Uniforms take the top 53
/// bits as `(w >> 11) + 1` over `2^53`, so they lie in `(0, 1]`. Gaussian
/// sample `i` is the cosine branch of Box-Muller on uniforms `2i` and `2i+1`.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn word(&self, counter: u64) -> u64 {
        let mut z = self
            .seed
            .wrapping_add(counter.wrapping_add(1).wrapping_mul(Self::GAMMA));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn gaussian(&self, index: u64) -> f64 {
        let u1 = self.uniform(2 * index);
        let u2 = self.uniform(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

pub fn generate(spec: &PhantomSpec) -> Result<(GrayImage, BinaryMask)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let rng = CounterRng::new(spec.seed);
    let ramp_den = ((w - 1) + (h - 1)) as f64;
    let mut values = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let ramp = if ramp_den > 0.0 {
                spec.gradient * (fx + fy) / ramp_den
            } else {
                0.0
            };
            let boost = spec
                .lesions
                .iter()
                .filter(|l| l.contains(fx, fy))
                .map(|l| l.boost)
                .fold(None, |acc: Option<f64>, b| {
                    Some(acc.map_or(b, |a| a.max(b)))
                });
            let noise = if spec.background.noise_sd > 0.0 {
                spec.background.noise_sd * rng.gaussian((y * w + x) as u64)
            } else {
                0.0
            };
            values.push(spec.background.mean + boost.unwrap_or(0.0) + ramp + noise);
            mask.push(boost.is_some());
        }
    }
    Ok((GrayImage::new(w, h, values)?, BinaryMask::new(w, h, mask)?))
}

/// Mean map value inside and outside the mask.
pub fn feature_contrast(mask: &BinaryMask, map: &FeatureMap) -> Result<(f64, f64)> {
    if mask.dims() != map.dims() {
        return Err(Error::DimensionMismatch {
            expected: mask.dims(),
            found: map.dims(),
        });
    }
    let (mut sin, mut nin, mut sout, mut nout) = (0.0, 0usize, 0.0, 0usize);
    for (&m, &v) in mask.values().iter().zip(map.values()) {
        if m {
            sin += v;
            nin += 1;
        } else {
            sout += v;
            nout += 1;
        }
    }
    if nin == 0 || nout == 0 {
        return Err(Error::InvalidParams(
            "mask must contain both foreground and background".into(),
        ));
    }
    Ok((sin / nin as f64, sout / nout as f64))
}
