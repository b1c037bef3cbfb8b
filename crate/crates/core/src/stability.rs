//! Training-curve stability: the standard deviation of consecutive
//! differences (SDD) of a validation-score curve. Smooth curves score low.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationCurve {
    pub label: String,
    scores: Vec<f64>,
}

impl ValidationCurve {
    pub fn new(label: impl Into<String>, scores: Vec<f64>) -> Result<Self> {
        if scores.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "a validation curve needs at least 2 points, got {}",
                scores.len()
            )));
        }
        if let Some(index) = scores.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            label: label.into(),
            scores,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Population standard deviation of `score[i] - score[i-1]`; a curve of `P`
/// points contributes `P - 1` differences and the divisor is `P - 1`.
pub fn sdd(curve: &ValidationCurve) -> f64 {
    let diffs: Vec<f64> = curve.scores.windows(2).map(|w| w[1] - w[0]).collect();
    // shifting by the first difference makes equal steps give exactly zero
    let shift = diffs[0];
    let n = diffs.len() as f64;
    let mean = diffs.iter().map(|d| d - shift).sum::<f64>() / n;
    let ss: f64 = diffs.iter().map(|d| (d - shift - mean).powi(2)).sum();
    (ss / n).sqrt()
}

/// Parses a CSV curve with a `score` column (scores kept in file order). An
/// optional `epoch` column is only checked to be strictly increasing.
pub fn load_curve(text: &str) -> Result<ValidationCurve> {
    if text.trim().is_empty() {
        return Err(Error::Empty("curve file"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let score_col = column("score").ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing \"score\" column".into(),
    })?;
    let epoch_col = column("epoch");

    let mut scores = Vec::new();
    let mut last_epoch: Option<f64> = None;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |col: usize, what: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("non-numeric {what} {raw:?}"),
                })
        };
        scores.push(cell(score_col, "score")?);
        if let Some(col) = epoch_col {
            let epoch = cell(col, "epoch")?;
            if last_epoch.is_some_and(|prev| epoch <= prev) {
                return Err(Error::Parse {
                    line,
                    message: format!("epoch {epoch} does not increase"),
                });
            }
            last_epoch = Some(epoch);
        }
    }
    if scores.is_empty() {
        return Err(Error::Empty("curve has no rows"));
    }
    ValidationCurve::new("", scores)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn curve(v: &[f64]) -> ValidationCurve {
        ValidationCurve::new("t", v.to_vec()).unwrap()
    }

    #[test]
    fn flat_and_linear_curves() {
        assert_eq!(sdd(&curve(&[0.5, 0.5, 0.5])), 0.0);
        assert_eq!(sdd(&curve(&[0.25, 0.5, 0.75, 1.0])), 0.0);
        // decimal steps are not exact in binary; differences agree to an ulp
        assert!(sdd(&curve(&[0.1, 0.2, 0.3, 0.4])) < 1e-15);
    }

    #[test]
    fn worked_example() {
        // d = (0.4, -0.2, 0.4), mean 0.2, deviations (0.2, -0.4, 0.2)
        let want = ((0.04 + 0.16 + 0.04) / 3.0f64).sqrt();
        assert_abs_diff_eq!(sdd(&curve(&[0.0, 0.4, 0.2, 0.6])), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.282843, epsilon = 1e-6);
    }

    #[test]
    fn too_short() {
        assert!(ValidationCurve::new("x", vec![0.3]).is_err());
        assert!(ValidationCurve::new("x", vec![0.3, f64::NAN]).is_err());
    }

    #[test]
    fn parses_score_column() {
        assert_eq!(load_curve("score\n0.1\n0.2").unwrap().scores(), &[0.1, 0.2]);
        assert_eq!(
            load_curve("epoch,score\n1,0.3\n2,0.5\n").unwrap().scores(),
            &[0.3, 0.5]
        );
    }

    #[test]
    fn parse_errors_carry_line() {
        match load_curve("score\nabc") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match load_curve("score\n0.1\n0.2\n\"x\"\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_curve(""), Err(Error::Empty(_))));
        assert!(matches!(load_curve("score\n"), Err(Error::Empty(_))));
        assert!(matches!(
            load_curve("value\n1\n2"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load_curve("epoch,score\n2,0.1\n1,0.2"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
