//! Radiomic feature maps for grayscale MRI slices.
//!
//! The crate computes two per-pixel maps over sliding windows of a
//! 256-level quantized slice:
//!
//! * **concentration rate** ([`cr`]): a trimmed sum of the brightest window
//!   values, robust to a few outliers;
//! * **Rényi entropy** ([`glcm`]): the order-`alpha` entropy of the window's
//!   combined gray-level co-occurrence matrix.
//!
//! Both come with a brute-force reference and an incremental implementation
//! that must agree with it. Around them sit the pieces needed to use the
//! maps as extra network input channels and to evaluate the result:
//! file formats ([`imgio`]), preprocessing, channel fusion, segmentation
//! metrics, training-curve stability, paired Wilcoxon tests and a synthetic
//! lesion phantom.

pub mod cli;
pub mod cr;
mod error;
pub mod fuse;
pub mod glcm;
mod image;
pub mod imgio;
pub mod metrics;
pub mod phantom;
pub mod preprocess;
pub mod stability;
pub mod stats;

pub use error::{Error, FormatError, Result};
pub use image::{reflect_index, BinaryMask, FeatureMap, GrayImage, QuantizedImage};
