//! Early fusion: the raw slice and its feature maps stacked as input
//! channels, in a fixed order, for export to a segmentation trainer.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{FeatureMap, GrayImage};
use crate::imgio::save_raster;
use crate::preprocess::minmax_scale;

pub const RAW_CHANNEL: &str = "flair";

#[derive(Debug, Clone, PartialEq)]
pub struct FusedStack {
    width: usize,
    height: usize,
    channels: Vec<(String, FeatureMap)>,
}

impl FusedStack {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> &[(String, FeatureMap)] {
        &self.channels
    }

    pub fn names(&self) -> Vec<&str> {
        self.channels.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn channel(&self, name: &str) -> Option<&FeatureMap> {
        self.channels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }
}

/// Stacks `raw` (channel `"flair"`) followed by `maps` in the given order.
/// With `normalize_features`, every feature channel is min-max scaled to
/// `[0, 1]` independently; the raw channel is taken as is.
pub fn build_stack(
    raw: &GrayImage,
    maps: &[(&str, &FeatureMap)],
    normalize_features: bool,
) -> Result<FusedStack> {
    let dims = raw.dims();
    let mut channels: Vec<(String, FeatureMap)> = Vec::with_capacity(1 + maps.len());
    channels.push((RAW_CHANNEL.to_string(), FeatureMap::from(raw.clone())));
    for &(name, map) in maps {
        if map.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: map.dims(),
            });
        }
        if channels.iter().any(|(n, _)| n == name) {
            return Err(Error::DuplicateChannel(name.to_string()));
        }
        let map = if normalize_features {
            FeatureMap::from_parts(dims.0, dims.1, minmax_scale(map.values()))
        } else {
            map.clone()
        };
        channels.push((name.to_string(), map));
    }
    Ok(FusedStack {
        width: dims.0,
        height: dims.1,
        channels,
    })
}

/// Writes `<stem>.bin` / `<stem>.json` with channels in stack order.
pub fn export_stack(stack: &FusedStack, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let refs: Vec<(&str, &FeatureMap)> = stack
        .channels
        .iter()
        .map(|(n, m)| (n.as_str(), m))
        .collect();
    save_raster(&refs, stem)
}
