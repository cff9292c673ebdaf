use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for fitted margins.
pub const FIT_TOL: f64 = 1e-8;
/// Default tolerance for exact identities.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Holds without fitting any constant.
    Holds,
    /// Holds out of sample with fitted constants.
    FittedHolds,
    Violated,
    /// A precondition of the inequality failed, nothing was compared.
    Inapplicable,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Holds | Verdict::FittedHolds)
    }
}

/// Both sides of an inequality `lhs <= rhs` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    /// Sample coordinates (times, or another scan variable).
    pub times: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub fitted_constants: BTreeMap<String, f64>,
    /// `[start, end]` of the samples used to fit constants.
    pub fit_window: Option<[f64; 2]>,
    /// `min (rhs - lhs)` over all samples.
    pub margin: f64,
    /// `min (rhs - lhs)` over the samples not used in the fit.
    pub validation_margin: Option<f64>,
    pub verdict: Verdict,
    pub tolerance: f64,
    pub config_hash: Option<String>,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, times: Vec<f64>, lhs: Vec<f64>, rhs: Vec<f64>, tolerance: f64) -> Self {
        let margin = min_gap(&lhs, &rhs, 0..lhs.len());
        let verdict = if margin >= -tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        Self {
            name: name.into(),
            times,
            lhs,
            rhs,
            fitted_constants: BTreeMap::new(),
            fit_window: None,
            margin,
            validation_margin: None,
            verdict,
            tolerance,
            config_hash: None,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn inapplicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        let mut r = Self::new(name, Vec::new(), Vec::new(), Vec::new(), 0.0);
        r.margin = f64::NAN;
        r.verdict = Verdict::Inapplicable;
        r.notes.push(reason.into());
        r
    }

    pub fn with_hash(mut self, hash: Option<String>) -> Self {
        self.config_hash = hash;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// `min (rhs - lhs)` over `range` (+inf when empty).
pub fn min_gap(lhs: &[f64], rhs: &[f64], range: std::ops::Range<usize>) -> f64 {
    range.map(|k| rhs[k] - lhs[k]).fold(f64::INFINITY, f64::min)
}

/// Fit and validation index ranges: times up to `T/2`, then the rest.
pub fn midpoint_split(times: &[f64]) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
    let half = times.last().copied().unwrap_or(0.0) / 2.0;
    let cut = times.partition_point(|&t| t <= half);
    (0..cut, cut..times.len())
}

/// Smallest `c >= 0` with `c >= gap` for every gap (`None` if a gap is +inf).
pub fn minimal_constant(gaps: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut c = 0.0f64;
    for g in gaps {
        if g == f64::INFINITY {
            return None;
        }
        if g.is_finite() {
            c = c.max(g);
        }
    }
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helpers() {
        assert_eq!(midpoint_split(&[0.0, 0.25, 0.5, 0.75, 1.0]), (0..3, 3..5));
        assert_eq!(minimal_constant([-1.0, 0.5, f64::NEG_INFINITY]), Some(0.5));
        assert_eq!(minimal_constant([f64::INFINITY]), None);
        let r = BoundReport::new("x", vec![0.0, 1.0], vec![1.0, 2.0], vec![1.0, 1.5], 1e-8);
        assert_eq!(r.margin, -0.5);
        assert_eq!(r.verdict, Verdict::Violated);
        let json = r.to_json().unwrap();
        assert!(json.contains("\"violated\""));
        assert_eq!(
            serde_json::to_string(&Verdict::FittedHolds).unwrap(),
            "\"fitted-holds\""
        );
    }
}
