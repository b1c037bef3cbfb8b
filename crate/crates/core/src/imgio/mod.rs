//! On-disk formats: binary PGM, a minimal single-file NIfTI-1 reader and
//! writer, and planar `f32` rasters described by a JSON sidecar.
//!
//! Decoders work on byte slices and never index past the declared payload;
//! every malformed or truncated input surfaces as a [`FormatError`].
//!
//! [`FormatError`]: crate::FormatError

mod nifti;
mod pgm;
mod raster;

pub use nifti::{
    decode_nifti, encode_nifti, encode_nifti_slice, load_nifti_slice, Datatype, NiftiVolume,
    RawVoxels, VolumeMeta,
};
pub use pgm::{encode_mask_pgm, encode_pgm, load_pgm, load_pgm_mask};
pub use raster::{
    decode_raster, encode_raster, load_raster, save_raster, Raster, RasterChannel, RasterSidecar,
    RASTER_DTYPE,
};

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Reads a single 2D image, picking the decoder by file extension:
/// `.nii` is read as NIfTI-1 (axial slice `slice`, default the middle slice),
/// anything else as binary PGM.
pub fn read_image(path: &Path, slice: Option<usize>) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    let is_nifti = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("nii"));
    if is_nifti {
        let volume = decode_nifti(&bytes)?;
        let index = slice.unwrap_or(volume.meta.dims.2 / 2);
        Ok(volume.slice(index)?)
    } else if slice.is_some() {
        Err(Error::InvalidParams(
            "slice index only applies to NIfTI input".into(),
        ))
    } else {
        Ok(load_pgm(&bytes)?)
    }
}
