use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::FeatureMap;

pub const RASTER_DTYPE: &str = "f32le";

/// JSON sidecar describing a planar raster payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterSidecar {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<String>,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RasterChannel {
    pub name: String,
    pub data: Vec<f32>,
}

/// A decoded multi-channel raster.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<RasterChannel>,
}

impl Raster {
    pub fn channel(&self, name: &str) -> Option<&RasterChannel> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Channels widened to `f64` feature maps.
    pub fn to_feature_maps(&self) -> Vec<(String, FeatureMap)> {
        self.channels
            .iter()
            .map(|c| {
                let values = c.data.iter().map(|&v| f64::from(v)).collect();
                (
                    c.name.clone(),
                    FeatureMap::from_parts(self.width, self.height, values),
                )
            })
            .collect()
    }
}

/// Planar little-endian `f32` payload, channel-major then row-major.
pub fn encode_raster(channels: &[(&str, &FeatureMap)]) -> Result<(Vec<u8>, RasterSidecar)> {
    let (_, first) = channels.first().ok_or(Error::Empty("raster channels"))?;
    let dims = first.dims();
    if let Some((_, bad)) = channels.iter().find(|(_, m)| m.dims() != dims) {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: bad.dims(),
        });
    }
    let mut payload = Vec::with_capacity(channels.len() * dims.0 * dims.1 * 4);
    for (_, map) in channels {
        for &v in map.values() {
            payload.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let sidecar = RasterSidecar {
        width: dims.0,
        height: dims.1,
        channels: channels.iter().map(|(n, _)| n.to_string()).collect(),
        dtype: RASTER_DTYPE.to_string(),
    };
    Ok((payload, sidecar))
}

pub fn decode_raster(payload: &[u8], sidecar: &RasterSidecar) -> Result<Raster> {
    if sidecar.dtype != RASTER_DTYPE {
        return Err(Error::InvalidParams(format!(
            "unsupported raster dtype {:?}",
            sidecar.dtype
        )));
    }
    if sidecar.width == 0 || sidecar.height == 0 || sidecar.channels.is_empty() {
        return Err(Error::InvalidParams("empty raster sidecar".into()));
    }
    let plane = sidecar
        .width
        .checked_mul(sidecar.height)
        .ok_or_else(|| Error::InvalidParams("raster too large".into()))?;
    let expected = plane
        .checked_mul(sidecar.channels.len())
        .and_then(|n| n.checked_mul(4));
    if expected != Some(payload.len()) {
        return Err(Error::InvalidParams(format!(
            "payload of {} bytes does not match {}x{}x{} f32",
            payload.len(),
            sidecar.channels.len(),
            sidecar.height,
            sidecar.width
        )));
    }
    let channels = sidecar
        .channels
        .iter()
        .zip(payload.chunks_exact(plane * 4))
        .map(|(name, bytes)| RasterChannel {
            name: name.clone(),
            data: bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect(),
        })
        .collect();
    Ok(Raster {
        width: sidecar.width,
        height: sidecar.height,
        channels,
    })
}

fn stem_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let mut bin = stem.as_os_str().to_owned();
    bin.push(".bin");
    let mut json = stem.as_os_str().to_owned();
    json.push(".json");
    (bin.into(), json.into())
}

/// Writes `<stem>.bin` and `<stem>.json`, returning both paths.
pub fn save_raster(channels: &[(&str, &FeatureMap)], stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let (payload, sidecar) = encode_raster(channels)?;
    let (bin, json) = stem_paths(stem);
    std::fs::write(&bin, payload)?;
    std::fs::write(&json, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok((bin, json))
}

pub fn load_raster(stem: &Path) -> Result<Raster> {
    let (bin, json) = stem_paths(stem);
    let sidecar: RasterSidecar = serde_json::from_slice(&std::fs::read(json)?)?;
    decode_raster(&std::fs::read(bin)?, &sidecar)
}
