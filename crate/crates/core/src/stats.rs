//! Paired Wilcoxon signed-rank test with Bonferroni adjustment.
//!
//! Differences are `treatment - baseline`. Exact zeros are dropped before
//! ranking, tied magnitudes share their mid-rank, and the null distribution
//! of `W+` is enumerated exactly for up to [`EXACT_MAX_N`] nonzero
//! differences. Larger samples use the normal approximation with tie and
//! continuity corrections.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const EXACT_MAX_N: usize = 20;

/// Paired observations `(baseline, treatment)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    pairs: Vec<(f64, f64)>,
}

impl PairedSamples {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("no paired samples"));
        }
        if let Some(index) = pairs
            .iter()
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { pairs })
    }

    pub fn from_columns(baseline: &[f64], treatment: &[f64]) -> Result<Self> {
        if baseline.len() != treatment.len() {
            return Err(Error::InvalidParams(format!(
                "{} baseline values vs {} treatment values",
                baseline.len(),
                treatment.len()
            )));
        }
        Self::new(
            baseline
                .iter()
                .copied()
                .zip(treatment.iter().copied())
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// Any shift.
    TwoSided,
    /// Treatment tends to exceed baseline.
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exact for `n <= EXACT_MAX_N`, normal approximation beyond.
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs supplied.
    pub n_pairs: usize,
    /// Nonzero differences actually ranked.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `min(W+, W-)` for two-sided tests, `W+` for one-sided.
    pub statistic: f64,
    pub pvalue: f64,
    /// `Exact` or `Normal`; `Auto` never appears here.
    pub method: Method,
}

/// Signed ranks of the nonzero differences: `(doubled rank, positive)`.
/// Doubling keeps mid-ranks integral.
fn signed_ranks(samples: &PairedSamples) -> (Vec<(u64, bool)>, Vec<usize>) {
    let mut diffs: Vec<f64> = samples
        .pairs
        .iter()
        .map(|&(b, t)| t - b)
        .filter(|&d| d != 0.0)
        .collect();
    diffs.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranked = Vec::with_capacity(diffs.len());
    let mut ties = Vec::new();
    let mut i = 0;
    while i < diffs.len() {
        let mut j = i + 1;
        while j < diffs.len() && diffs[j].abs() == diffs[i].abs() {
            j += 1;
        }
        // ranks i+1..=j share (i+1+j)/2; doubled: i+1+j
        let doubled = (i + 1 + j) as u64;
        ranked.extend(diffs[i..j].iter().map(|&d| (doubled, d > 0.0)));
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranked, ties)
}

pub fn wilcoxon_signed_rank(samples: &PairedSamples, alternative: Alternative) -> WilcoxonResult {
    wilcoxon_signed_rank_with(samples, alternative, Method::Auto)
        .expect("automatic method selection always succeeds")
}

pub fn wilcoxon_signed_rank_with(
    samples: &PairedSamples,
    alternative: Alternative,
    method: Method,
) -> Result<WilcoxonResult> {
    let (ranked, ties) = signed_ranks(samples);
    let n = ranked.len();
    let w_plus2: u64 = ranked.iter().filter(|r| r.1).map(|r| r.0).sum();
    let total2: u64 = ranked.iter().map(|r| r.0).sum();
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;
    let statistic = match alternative {
        Alternative::TwoSided => w_plus.min(w_minus),
        Alternative::Greater => w_plus,
    };
    let method = match method {
        Method::Auto if n <= EXACT_MAX_N => Method::Exact,
        Method::Auto => Method::Normal,
        m => m,
    };
    let mut result = WilcoxonResult {
        n_pairs: samples.len(),
        n,
        w_plus,
        w_minus,
        statistic,
        pvalue: 1.0,
        method,
    };
    if n == 0 {
        result.statistic = 0.0;
        return Ok(result);
    }
    result.pvalue = match method {
        Method::Exact => {
            if n > 63 {
                return Err(Error::InvalidParams(format!(
                    "exact enumeration supports at most 63 nonzero differences, got {n}"
                )));
            }
            exact_pvalue(&ranked, w_plus2, alternative)
        }
        _ => normal_pvalue(n, &ties, w_plus, alternative),
    };
    Ok(result)
}

/// Null distribution of doubled `W+` over all `2^n` sign assignments,
/// accumulated one rank at a time.
fn exact_pvalue(ranked: &[(u64, bool)], w_plus2: u64, alternative: Alternative) -> f64 {
    let total2: u64 = ranked.iter().map(|r| r.0).sum();
    let mut counts = vec![0u64; total2 as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &(r, _) in ranked {
        let r = r as usize;
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c > 0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }
    let all = 2f64.powi(ranked.len() as i32);
    let t = w_plus2 as usize;
    let upper = counts[t..].iter().sum::<u64>() as f64 / all;
    match alternative {
        Alternative::Greater => upper,
        Alternative::TwoSided => {
            let lower = counts[..=t].iter().sum::<u64>() as f64 / all;
            (2.0 * lower.min(upper)).min(1.0)
        }
    }
}

fn normal_pvalue(n: usize, ties: &[usize], w_plus: f64, alternative: Alternative) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| (t as f64).powi(3) - t as f64)
        .sum::<f64>()
        / 48.0;
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    match alternative {
        Alternative::TwoSided => {
            let z = ((w_plus - mean).abs() - 0.5).max(0.0) / sd;
            erfc(z / std::f64::consts::SQRT_2).min(1.0)
        }
        Alternative::Greater => {
            let z = (w_plus - mean - 0.5) / sd;
            0.5 * erfc(z / std::f64::consts::SQRT_2)
        }
    }
}

/// `min(1, p * comparisons)` for each p-value.
pub fn bonferroni(pvalues: &[f64], comparisons: usize) -> Result<Vec<f64>> {
    if comparisons < pvalues.len() || comparisons == 0 {
        return Err(Error::InvalidParams(format!(
            "comparison count {comparisons} is smaller than the {} p-values",
            pvalues.len()
        )));
    }
    pvalues
        .iter()
        .map(|&p| {
            if (0.0..=1.0).contains(&p) {
                Ok((p * comparisons as f64).min(1.0))
            } else {
                Err(Error::OutOfRange {
                    what: "p-value",
                    value: p,
                })
            }
        })
        .collect()
}

/// Parses a CSV with `baseline` and `treatment` columns.
pub fn load_paired(text: &str) -> Result<PairedSamples> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing {name:?} column"),
            })
    };
    let (bcol, tcol) = (column("baseline")?, column("treatment")?);
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("non-numeric value {raw:?}"),
                })
        };
        pairs.push((cell(bcol)?, cell(tcol)?));
    }
    PairedSamples::new(pairs)
}
