//! Raster containers shared across the pipeline.
//!
//! All rasters are row-major: the value at column `x`, row `y` lives at
//! index `y * width + x`.

use crate::error::{Error, Result};

/// A 2D scalar raster with raw or normalized intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
    spacing: Option<(f64, f64)>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            values,
            spacing: None,
        })
    }

    /// Builds an image from rows of equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::InvalidParams("ragged rows".into()));
        }
        let values = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(width, height, values)
    }

    pub fn with_spacing(mut self, spacing: Option<(f64, f64)>) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pixel spacing `(dx, dy)` in millimetres, when known.
    pub fn spacing(&self) -> Option<(f64, f64)> {
        self.spacing
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Gray levels in `0..=255`, the index space of both feature extractors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    levels: Vec<u8>,
}

impl QuantizedImage {
    pub fn new(width: usize, height: usize, levels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, levels.len())?;
        Ok(Self {
            width,
            height,
            levels,
        })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(Error::InvalidParams("ragged rows".into()));
        }
        let levels = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::new(width, height, levels)
    }

    pub fn constant(width: usize, height: usize, level: u8) -> Result<Self> {
        Self::new(width, height, vec![level; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn levels(&self) -> &[u8] {
        &self.levels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.levels[y * self.width + x]
    }

    /// Copy of the image extended by `pad` pixels on every side using
    /// mirror reflection (see [`reflect_index`]).
    pub(crate) fn padded(&self, pad: usize) -> Padded {
        let pw = self.width + 2 * pad;
        let ph = self.height + 2 * pad;
        let mut data = Vec::with_capacity(pw * ph);
        for py in 0..ph {
            let y = reflect_index(py as isize - pad as isize, self.height);
            let row = &self.levels[y * self.width..(y + 1) * self.width];
            for px in 0..pw {
                data.push(row[reflect_index(px as isize - pad as isize, self.width)]);
            }
        }
        Padded { width: pw, data }
    }
}

pub(crate) struct Padded {
    pub width: usize,
    pub data: Vec<u8>,
}

impl Padded {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Mirror reflection that repeats the edge sample (`-1 -> 0`, `n -> n-1`).
/// The extension is periodic with period `2n`, so it is defined for any
/// offset and any `n >= 1`.
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

/// A real-valued raster aligned pixel-for-pixel with its source image.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

impl From<GrayImage> for FeatureMap {
    fn from(img: GrayImage) -> Self {
        Self::from_parts(img.width, img.height, img.values)
    }
}

/// Binary segmentation mask; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, values: Vec<bool>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a mask from integer samples; zero is background, anything else
    /// foreground.
    pub fn from_levels<T: Copy + Default + PartialEq>(
        width: usize,
        height: usize,
        levels: &[T],
    ) -> Result<Self> {
        let zero = T::default();
        Self::new(width, height, levels.iter().map(|&v| v != zero).collect())
    }

    /// Thresholds a gray image: nonzero samples are foreground.
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            values: img.values.iter().map(|&v| v != 0.0).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.values[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    /// Foreground as 1.0, background as 0.0.
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .map(|&v| f64::from(u8::from(v)))
                .collect(),
            spacing: None,
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParams(format!(
            "image dimensions must be >= 1, got {width}x{height}"
        )));
    }
    match width.checked_mul(height) {
        Some(n) if n == len => Ok(()),
        _ => Err(Error::InvalidParams(format!(
            "{len} values do not fill a {width}x{height} raster"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_repeats_edge() {
        let got: Vec<usize> = (-3..6).map(|i| reflect_index(i, 3)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 2, 1, 0]);
        assert!((-7..7).all(|i| reflect_index(i, 1) == 0));
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GrayImage::new(0, 2, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![0.0; 3]).is_err());
        assert!(matches!(
            GrayImage::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn padded_mirrors_borders() {
        let img = QuantizedImage::from_rows(&[[1u8, 2], [3, 4]]).unwrap();
        let p = img.padded(1);
        assert_eq!(p.width, 4);
        assert_eq!(&p.data[0..4], &[1, 1, 2, 2]);
        assert_eq!(&p.data[4..8], &[1, 1, 2, 2]);
        assert_eq!(&p.data[12..16], &[3, 3, 4, 4]);
    }
}
