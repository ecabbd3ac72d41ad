use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::{PEntry, PSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubseqPoint {
    pub n: u64,
    pub p: f64,
    pub err: f64,
}

/// The entries whose `ln n` has fractional part near `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubseqProbe {
    pub phi: f64,
    pub tolerance: f64,
    pub points: Vec<SubseqPoint>,
    /// Weighted standard deviation of the selected values.
    pub dispersion: f64,
    /// The same statistic over every entry with `n >= 3`.
    pub full_dispersion: f64,
}

/// Distance between fractional parts on the unit circle.
fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Standard deviation with weights `1 / max(err, floor)^2`, where `floor` is
/// the smallest positive error present (uniform weights when none is).
fn dispersion(points: &[SubseqPoint]) -> f64 {
    let floor = points
        .iter()
        .map(|p| p.err)
        .filter(|&e| e > 0.0)
        .fold(f64::INFINITY, f64::min);
    let w = |p: &SubseqPoint| {
        if floor.is_finite() {
            p.err.max(floor).powi(-2)
        } else {
            1.0
        }
    };
    let sw: f64 = points.iter().map(w).sum();
    let mean = points.iter().map(|p| w(p) * p.p).sum::<f64>() / sw;
    (points
        .iter()
        .map(|p| w(p) * (p.p - mean).powi(2))
        .sum::<f64>()
        / sw)
        .sqrt()
}

fn point(e: &PEntry) -> SubseqPoint {
    SubseqPoint {
        n: e.n,
        p: e.value_f64(),
        err: e.error(),
    }
}

/// Selects entries with `|frac(ln n) - phi| <= tolerance` (circular distance).
///
/// Merging predicts that along such a subsequence the values settle while the
/// whole series keeps oscillating; the probe reports both dispersions and
/// decides nothing.
pub fn subsequence_probe(series: &PSeries, phi: f64, tolerance: f64) -> Result<SubseqProbe> {
    if !(0.0..1.0).contains(&phi) {
        return Err(invalid(format!("phi must lie in [0, 1), got {phi}")));
    }
    if !(tolerance > 0.0 && tolerance < 0.5) {
        return Err(invalid(format!(
            "tolerance must lie in (0, 0.5), got {tolerance}"
        )));
    }
    let all: Vec<SubseqPoint> = series
        .entries()
        .iter()
        .filter(|e| e.n >= 3)
        .map(point)
        .collect();
    let (lo, hi) = match (all.first(), all.last()) {
        (Some(a), Some(b)) => (a.n as f64, b.n as f64),
        _ => return Err(invalid("series has no entries with n >= 3")),
    };
    if hi / lo < 1e3 {
        return Err(invalid(format!(
            "series spans n = {lo}..{hi}, fewer than three decades"
        )));
    }
    let points: Vec<SubseqPoint> = all
        .iter()
        .copied()
        .filter(|p| phase_distance((p.n as f64).ln().fract(), phi) <= tolerance)
        .collect();
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            found: points.len(),
            needed: 3,
        });
    }
    Ok(SubseqProbe {
        phi,
        tolerance,
        dispersion: dispersion(&points),
        full_dispersion: dispersion(&all),
        points,
    })
}
