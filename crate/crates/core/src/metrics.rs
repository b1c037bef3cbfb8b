//! Pixelwise segmentation metrics and their aggregation across slices and
//! cross-validation folds.
//!
//! Empty denominators resolve to 1.0: two empty masks agree perfectly, an
//! empty prediction has no false positives (precision 1) and an empty ground
//! truth has nothing to miss (sensitivity 1). Dice is 0 whenever exactly one
//! side is empty. These conventions keep background-only slices from
//! dragging fold means down and preserve
//! `precision(a, b) == sensitivity(b, a)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BinaryMask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn dice(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn sensitivity(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn scores(&self) -> SliceScores {
        SliceScores {
            dice: self.dice(),
            precision: self.precision(),
            sensitivity: self.sensitivity(),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<Confusion> {
    if pred.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            found: pred.dims(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &g) in pred.values().iter().zip(gt.values()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn dice(c: &Confusion) -> f64 {
    c.dice()
}

pub fn precision(c: &Confusion) -> f64 {
    c.precision()
}

pub fn sensitivity(c: &Confusion) -> f64 {
    c.sensitivity()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceScores {
    pub dice: f64,
    pub precision: f64,
    pub sensitivity: f64,
}

/// Mean with the sample (n − 1) standard deviation; `sd` is `None` for a
/// single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

pub fn aggregate(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty("no values to aggregate"));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Ok(Summary { n, mean, sd })
}

/// Slice-level mean within each fold, then mean ± sd across the fold means.
pub fn aggregate_folds<F: AsRef<[f64]>>(folds: &[F]) -> Result<Summary> {
    let means = folds
        .iter()
        .map(|f| aggregate(f.as_ref()).map(|s| s.mean))
        .collect::<Result<Vec<f64>>>()?;
    aggregate(&means)
}

/// Per-metric summaries over a set of slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub dice: Summary,
    pub precision: Summary,
    pub sensitivity: Summary,
}

pub fn summarize(scores: &[SliceScores]) -> Result<ScoreSummary> {
    let pick = |f: fn(&SliceScores) -> f64| scores.iter().map(f).collect::<Vec<_>>();
    Ok(ScoreSummary {
        dice: aggregate(&pick(|s| s.dice))?,
        precision: aggregate(&pick(|s| s.precision))?,
        sensitivity: aggregate(&pick(|s| s.sensitivity))?,
    })
}
