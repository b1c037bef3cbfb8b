//! Minimal NIfTI-1: uncompressed single-file (`n+1`) volumes of up to three
//! dimensions with one of four sample types. Orientation fields are ignored;
//! slices are taken along the third (axial) axis.

use crate::error::{Error, FormatError, Result};
use crate::image::GrayImage;

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;

const OFF_DIM: usize = 40;
const OFF_DATATYPE: usize = 70;
const OFF_BITPIX: usize = 72;
const OFF_PIXDIM: usize = 76;
const OFF_VOX_OFFSET: usize = 108;
const OFF_SCL_SLOPE: usize = 112;
const OFF_SCL_INTER: usize = 116;
const OFF_XYZT_UNITS: usize = 123;
const OFF_MAGIC: usize = 344;

/// Supported NIfTI-1 sample types.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Datatype {
    Uint8,
    Int16,
    Uint16,
    Float32,
}

impl Datatype {
    pub fn code(self) -> i16 {
        match self {
            Datatype::Uint8 => 2,
            Datatype::Int16 => 4,
            Datatype::Float32 => 16,
            Datatype::Uint16 => 512,
        }
    }

    pub fn from_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(Datatype::Uint8),
            4 => Some(Datatype::Int16),
            16 => Some(Datatype::Float32),
            512 => Some(Datatype::Uint16),
            _ => None,
        }
    }

    pub fn bytes(self) -> usize {
        match self {
            Datatype::Uint8 => 1,
            Datatype::Int16 | Datatype::Uint16 => 2,
            Datatype::Float32 => 4,
        }
    }
}

/// Header fields the reader consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeMeta {
    pub dims: (usize, usize, usize),
    pub datatype: Datatype,
    /// Effective `(slope, intercept)`; a stored slope of 0 reads back as 1.
    pub scale: (f32, f32),
    /// Voxel sizes in mm (`pixdim[1..=3]`).
    pub voxel_size: (f32, f32, f32),
}

impl VolumeMeta {
    pub fn new(dims: (usize, usize, usize), datatype: Datatype) -> Self {
        Self {
            dims,
            datatype,
            scale: (1.0, 0.0),
            voxel_size: (1.0, 1.0, 1.0),
        }
    }

    fn voxel_count(&self) -> Option<usize> {
        self.dims
            .0
            .checked_mul(self.dims.1)?
            .checked_mul(self.dims.2)
    }
}

/// Raw (unscaled) voxel samples in file order, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub enum RawVoxels {
    Uint8(Vec<u8>),
    Int16(Vec<i16>),
    Uint16(Vec<u16>),
    Float32(Vec<f32>),
}

impl RawVoxels {
    pub fn datatype(&self) -> Datatype {
        match self {
            RawVoxels::Uint8(_) => Datatype::Uint8,
            RawVoxels::Int16(_) => Datatype::Int16,
            RawVoxels::Uint16(_) => Datatype::Uint16,
            RawVoxels::Float32(_) => Datatype::Float32,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RawVoxels::Uint8(v) => v.len(),
            RawVoxels::Int16(v) => v.len(),
            RawVoxels::Uint16(v) => v.len(),
            RawVoxels::Float32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn raw(&self, i: usize) -> f64 {
        match self {
            RawVoxels::Uint8(v) => f64::from(v[i]),
            RawVoxels::Int16(v) => f64::from(v[i]),
            RawVoxels::Uint16(v) => f64::from(v[i]),
            RawVoxels::Float32(v) => f64::from(v[i]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NiftiVolume {
    pub meta: VolumeMeta,
    pub voxels: RawVoxels,
}

impl NiftiVolume {
    /// Axial slice `index` with `raw * slope + intercept` applied.
    pub fn slice(&self, index: usize) -> std::result::Result<GrayImage, FormatError> {
        let (nx, ny, nz) = self.meta.dims;
        if index >= nz {
            return Err(FormatError::SliceOutOfBounds { index, nz });
        }
        let (slope, inter) = (f64::from(self.meta.scale.0), f64::from(self.meta.scale.1));
        let base = index * nx * ny;
        let values: Vec<f64> = (base..base + nx * ny)
            .map(|i| self.voxels.raw(i) * slope + inter)
            .collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FormatError::MalformedHeader {
                offset: OFF_SCL_SLOPE,
                reason: format!("non-finite voxel value at slice offset {i}"),
            });
        }
        let spacing = Some((
            f64::from(self.meta.voxel_size.0),
            f64::from(self.meta.voxel_size.1),
        ));
        Ok(GrayImage::new(nx, ny, values)
            .expect("finite values and validated dims")
            .with_spacing(spacing))
    }
}

/// Decodes one axial slice; see [`decode_nifti`] for the accepted layout.
pub fn load_nifti_slice(
    bytes: &[u8],
    index: usize,
) -> std::result::Result<(GrayImage, VolumeMeta), FormatError> {
    let volume = decode_nifti(bytes)?;
    let img = volume.slice(index)?;
    Ok((img, volume.meta))
}

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

struct Reader<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl Reader<'_> {
    fn array<const N: usize>(&self, off: usize) -> [u8; N] {
        let mut a = [0u8; N];
        a.copy_from_slice(&self.bytes[off..off + N]);
        if matches!(self.endian, Endian::Big) {
            a.reverse();
        }
        a
    }
    fn i16(&self, off: usize) -> i16 {
        i16::from_le_bytes(self.array(off))
    }
    fn f32(&self, off: usize) -> f32 {
        f32::from_le_bytes(self.array(off))
    }
}

/// Decodes a whole volume. Accepts either byte order (detected from
/// `sizeof_hdr`), magic `n+1`, datatypes uint8/int16/uint16/float32, and at
/// most three non-singleton dimensions.
pub fn decode_nifti(bytes: &[u8]) -> std::result::Result<NiftiVolume, FormatError> {
    if bytes.len() < HEADER_SIZE {
        return Err(FormatError::Truncated {
            offset: 0,
            needed: HEADER_SIZE,
            available: bytes.len(),
        });
    }
    let head = [bytes[0], bytes[1], bytes[2], bytes[3]];
    let endian = if i32::from_le_bytes(head) == HEADER_SIZE as i32 {
        Endian::Little
    } else if i32::from_be_bytes(head) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(FormatError::MalformedHeader {
            offset: 0,
            reason: "sizeof_hdr is not 348".into(),
        });
    };
    let r = Reader { bytes, endian };

    let magic = &bytes[OFF_MAGIC..OFF_MAGIC + 4];
    match magic {
        b"n+1\0" => {}
        b"ni1\0" => {
            return Err(FormatError::UnsupportedLayout {
                offset: OFF_MAGIC,
                found: "ni1".into(),
            })
        }
        _ => {
            return Err(FormatError::UnsupportedMagic {
                offset: OFF_MAGIC,
                found: String::from_utf8_lossy(magic)
                    .trim_end_matches('\0')
                    .to_string(),
            })
        }
    }

    let ndim = r.i16(OFF_DIM);
    if !(1..=7).contains(&ndim) {
        return Err(FormatError::MalformedHeader {
            offset: OFF_DIM,
            reason: format!("dim[0] = {ndim}"),
        });
    }
    let mut dims = [1usize; 7];
    for (k, d) in dims.iter_mut().enumerate().take(ndim as usize) {
        let off = OFF_DIM + 2 * (k + 1);
        let v = r.i16(off);
        if v < 1 {
            return Err(FormatError::MalformedHeader {
                offset: off,
                reason: format!("dim[{}] = {v}", k + 1),
            });
        }
        *d = v as usize;
    }
    if let Some(k) = dims[3..].iter().position(|&d| d > 1) {
        return Err(FormatError::MalformedHeader {
            offset: OFF_DIM + 2 * (k + 4),
            reason: "volumes beyond three dimensions are not supported".into(),
        });
    }

    let code = r.i16(OFF_DATATYPE);
    let datatype = Datatype::from_code(code).ok_or(FormatError::UnsupportedDatatype {
        offset: OFF_DATATYPE,
        code,
    })?;
    let bitpix = r.i16(OFF_BITPIX);
    if bitpix as usize != datatype.bytes() * 8 {
        return Err(FormatError::MalformedHeader {
            offset: OFF_BITPIX,
            reason: format!("bitpix {bitpix} does not match datatype code {code}"),
        });
    }

    let vox_offset = r.f32(OFF_VOX_OFFSET);
    if !(vox_offset.is_finite() && vox_offset >= HEADER_SIZE as f32 && vox_offset.fract() == 0.0) {
        return Err(FormatError::MalformedHeader {
            offset: OFF_VOX_OFFSET,
            reason: format!("vox_offset {vox_offset}"),
        });
    }
    let vox_offset = vox_offset as usize;
    if vox_offset > bytes.len() {
        return Err(FormatError::VoxOffsetBeyondEnd {
            vox_offset,
            len: bytes.len(),
        });
    }

    let slope = r.f32(OFF_SCL_SLOPE);
    let inter = r.f32(OFF_SCL_INTER);
    let slope = if slope == 0.0 || !slope.is_finite() {
        1.0
    } else {
        slope
    };
    let inter = if inter.is_finite() { inter } else { 0.0 };
    let voxel_size = (
        r.f32(OFF_PIXDIM + 4),
        r.f32(OFF_PIXDIM + 8),
        r.f32(OFF_PIXDIM + 12),
    );

    let meta = VolumeMeta {
        dims: (dims[0], dims[1], dims[2]),
        datatype,
        scale: (slope, inter),
        voxel_size,
    };
    let count = meta
        .voxel_count()
        .and_then(|n| n.checked_mul(datatype.bytes()).map(|b| (n, b)));
    let (count, needed) = count.ok_or_else(|| FormatError::MalformedHeader {
        offset: OFF_DIM,
        reason: "volume too large".into(),
    })?;
    let available = bytes.len() - vox_offset;
    if available < needed {
        return Err(FormatError::Truncated {
            offset: vox_offset,
            needed,
            available,
        });
    }
    let data = Reader {
        bytes: &bytes[vox_offset..vox_offset + needed],
        endian,
    };
    let voxels = match datatype {
        Datatype::Uint8 => RawVoxels::Uint8(data.bytes.to_vec()),
        Datatype::Int16 => RawVoxels::Int16((0..count).map(|i| data.i16(2 * i)).collect()),
        Datatype::Uint16 => RawVoxels::Uint16(
            (0..count)
                .map(|i| u16::from_le_bytes(data.array(2 * i)))
                .collect(),
        ),
        Datatype::Float32 => RawVoxels::Float32((0..count).map(|i| data.f32(4 * i)).collect()),
    };
    Ok(NiftiVolume { meta, voxels })
}

/// Encodes a little-endian single-file NIfTI-1 volume. The sample type is
/// taken from `voxels`; `meta.datatype` must agree with it.
pub fn encode_nifti(meta: &VolumeMeta, voxels: &RawVoxels) -> Result<Vec<u8>> {
    let (nx, ny, nz) = meta.dims;
    if voxels.datatype() != meta.datatype {
        return Err(Error::InvalidParams(format!(
            "datatype {:?} does not match voxels {:?}",
            meta.datatype,
            voxels.datatype()
        )));
    }
    let max = i16::MAX as usize;
    if nx == 0 || ny == 0 || nz == 0 || nx > max || ny > max || nz > max {
        return Err(Error::InvalidParams(format!(
            "unsupported NIfTI dims {nx}x{ny}x{nz}"
        )));
    }
    if meta.voxel_count() != Some(voxels.len()) {
        return Err(Error::InvalidParams(format!(
            "{} voxels do not fill {nx}x{ny}x{nz}",
            voxels.len()
        )));
    }

    let mut out = vec![0u8; DATA_OFFSET];
    let put = |out: &mut Vec<u8>, off: usize, b: &[u8]| out[off..off + b.len()].copy_from_slice(b);
    put(&mut out, 0, &(HEADER_SIZE as i32).to_le_bytes());
    let dim: [i16; 8] = [3, nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for (k, d) in dim.iter().enumerate() {
        put(&mut out, OFF_DIM + 2 * k, &d.to_le_bytes());
    }
    put(&mut out, OFF_DATATYPE, &meta.datatype.code().to_le_bytes());
    put(
        &mut out,
        OFF_BITPIX,
        &((meta.datatype.bytes() * 8) as i16).to_le_bytes(),
    );
    let pixdim: [f32; 8] = [
        1.0,
        meta.voxel_size.0,
        meta.voxel_size.1,
        meta.voxel_size.2,
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    for (k, p) in pixdim.iter().enumerate() {
        put(&mut out, OFF_PIXDIM + 4 * k, &p.to_le_bytes());
    }
    put(
        &mut out,
        OFF_VOX_OFFSET,
        &(DATA_OFFSET as f32).to_le_bytes(),
    );
    put(&mut out, OFF_SCL_SLOPE, &meta.scale.0.to_le_bytes());
    put(&mut out, OFF_SCL_INTER, &meta.scale.1.to_le_bytes());
    out[OFF_XYZT_UNITS] = 2; // millimetres
    put(&mut out, OFF_MAGIC, b"n+1\0");

    out.reserve(voxels.len() * meta.datatype.bytes());
    match voxels {
        RawVoxels::Uint8(v) => out.extend_from_slice(v),
        RawVoxels::Int16(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        RawVoxels::Uint16(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        RawVoxels::Float32(v) => v
            .iter()
            .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    Ok(out)
}

/// Writes a single slice as a float32 volume with `nz = 1`.
pub fn encode_nifti_slice(img: &GrayImage) -> Result<Vec<u8>> {
    let mut meta = VolumeMeta::new((img.width(), img.height(), 1), Datatype::Float32);
    if let Some((dx, dy)) = img.spacing() {
        meta.voxel_size = (dx as f32, dy as f32, 1.0);
    }
    let voxels = RawVoxels::Float32(img.values().iter().map(|&v| v as f32).collect());
    encode_nifti(&meta, &voxels)
}
