//! Per-slice intensity normalization, 256-level quantization and resizing.

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage, QuantizedImage};

/// Min-max scales a slice to `[0, 1]`. A constant slice maps to all zeros.
pub fn minmax_normalize(img: &GrayImage) -> GrayImage {
    let values = minmax_scale(img.values());
    GrayImage::new(img.width(), img.height(), values)
        .expect("dimensions unchanged and values finite")
        .with_spacing(img.spacing())
}

pub(crate) fn minmax_scale(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range > 0.0 && range.is_finite() {
        values
            .iter()
            .map(|&v| ((v - lo) / range).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Maps `[0, 1]` intensities to gray levels `round(v * 255)`, rounding
/// halves up.
pub fn quantize(img: &GrayImage) -> Result<QuantizedImage> {
    let levels = img
        .values()
        .iter()
        .map(|&v| {
            if (0.0..=1.0).contains(&v) {
                Ok((v * 255.0 + 0.5).floor() as u8)
            } else {
                Err(Error::OutOfRange {
                    what: "normalized intensity",
                    value: v,
                })
            }
        })
        .collect::<Result<Vec<u8>>>()?;
    QuantizedImage::new(img.width(), img.height(), levels)
}

/// Normalize then quantize: the standard route from a raw slice to the
/// feature extractors' input.
pub fn prepare(img: &GrayImage) -> QuantizedImage {
    quantize(&minmax_normalize(img)).expect("normalized values lie in [0, 1]")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResizeMode {
    /// Closest source pixel centre; ties go to the smaller index.
    Nearest,
    /// Corner-aligned, edge-clamped bilinear interpolation.
    Bilinear,
}

pub fn resize(img: &GrayImage, width: usize, height: usize, mode: ResizeMode) -> Result<GrayImage> {
    check_target(width, height)?;
    let (sw, sh) = img.dims();
    let values = match mode {
        ResizeMode::Nearest => {
            let xs: Vec<usize> = (0..width).map(|x| nearest_source(x, sw, width)).collect();
            let mut out = Vec::with_capacity(width * height);
            for y in 0..height {
                let sy = nearest_source(y, sh, height);
                out.extend(xs.iter().map(|&sx| img.get(sx, sy)));
            }
            out
        }
        ResizeMode::Bilinear => {
            let xs: Vec<(usize, usize, f64)> =
                (0..width).map(|x| linear_source(x, sw, width)).collect();
            let mut out = Vec::with_capacity(width * height);
            for y in 0..height {
                let (y0, y1, ty) = linear_source(y, sh, height);
                for &(x0, x1, tx) in &xs {
                    let top = img.get(x0, y0) * (1.0 - tx) + img.get(x1, y0) * tx;
                    let bottom = img.get(x0, y1) * (1.0 - tx) + img.get(x1, y1) * tx;
                    out.push(top * (1.0 - ty) + bottom * ty);
                }
            }
            out
        }
    };
    let spacing = img.spacing().map(|(dx, dy)| {
        (
            dx * sw as f64 / width as f64,
            dy * sh as f64 / height as f64,
        )
    });
    Ok(GrayImage::new(width, height, values)?.with_spacing(spacing))
}

/// Nearest-neighbour resize of a mask; the result is still binary.
pub fn resize_mask(mask: &BinaryMask, width: usize, height: usize) -> Result<BinaryMask> {
    check_target(width, height)?;
    let (sw, sh) = mask.dims();
    let xs: Vec<usize> = (0..width).map(|x| nearest_source(x, sw, width)).collect();
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = nearest_source(y, sh, height);
        out.extend(xs.iter().map(|&sx| mask.get(sx, sy)));
    }
    BinaryMask::new(width, height, out)
}

fn check_target(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParams(format!(
            "resize target must be >= 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Output pixel `x` centre sits at `(2x + 1) * src / (2 * dst)` in source edge
/// coordinates; the pixel containing it is `ceil(u) - 1`, which resolves an
/// exact boundary hit toward the smaller index.
fn nearest_source(x: usize, src: usize, dst: usize) -> usize {
    let num = (2 * x + 1) * src;
    ((num - 1) / (2 * dst)).min(src - 1)
}

/// Corner-aligned: output `0` and `dst - 1` land on source `0` and `src - 1`.
/// A single output sample reads the source centre.
fn linear_source(x: usize, src: usize, dst: usize) -> (usize, usize, f64) {
    let pos = if dst == 1 {
        (src - 1) as f64 / 2.0
    } else {
        x as f64 * (src - 1) as f64 / (dst - 1) as f64
    };
    let i0 = (pos.floor() as usize).min(src - 1);
    let i1 = (i0 + 1).min(src - 1);
    (i0, i1, pos - i0 as f64)
}
