//! The p_n series on the log-n axis: assembly, wave detection, the
//! wave-decay fit and fixed-phase subsequences.
//!
//! Logarithms are natural throughout, so one e-fold step in n is one unit on
//! the axis.

mod subseq;
mod waves;

pub use subseq::{subsequence_probe, SubseqPoint, SubseqProbe};
pub use waves::{
    detect_waves, fit_wave_decay, wave_trace, write_trace_csv, Extremum, ExtremumKind, TracePoint,
    WaveDecay, WaveModel, DEFAULT_SMOOTHING,
};

use crate::error::{invalid, Result};
use crate::exact::{p_recurrence, Limits, RecurrenceMode};
use crate::series::{PEntry, PSeries, PValue};
use crate::sim::estimate_p;

/// Recurrence values for `n <= exact_to` followed by Monte Carlo estimates on
/// `mc_grid`, each entry keeping its provenance.
///
/// `exact_to = 0` means no recurrence segment at all. The grid must be
/// strictly increasing and lie above `exact_to`.
pub fn build_series(
    exact_to: u64,
    mc_grid: &[u64],
    reps: u64,
    seed: u64,
    mode: RecurrenceMode,
    limits: &Limits,
) -> Result<PSeries> {
    if mc_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("mc grid must be strictly increasing"));
    }
    if let Some(&first) = mc_grid.first() {
        if exact_to > 0 && first <= exact_to {
            return Err(invalid(format!(
                "mc grid starts at {first}, which overlaps the recurrence segment up to {exact_to}"
            )));
        }
    }
    if !mc_grid.is_empty() && reps == 0 {
        return Err(invalid("mc grid needs reps >= 1"));
    }
    let mut entries = if exact_to > 0 {
        p_recurrence(exact_to, mode, limits)?.series.into_entries()
    } else {
        Vec::new()
    };
    for &n in mc_grid {
        let est = estimate_p(n, reps, seed)?;
        entries.push(PEntry {
            n,
            value: PValue::MonteCarlo(est),
        });
    }
    PSeries::new(entries)
}

/// Integers spaced `1/per_unit` apart in `ln n` on `[lo, hi]`, deduplicated.
pub fn log_grid(lo: u64, hi: u64, per_unit: f64) -> Result<Vec<u64>> {
    if lo == 0 || hi < lo || !(per_unit > 0.0) {
        return Err(invalid(
            "log grid needs 1 <= lo <= hi and a positive density",
        ));
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let steps = ((b - a) * per_unit).floor() as u64;
    let mut out: Vec<u64> = (0..=steps)
        .map(|i| (a + i as f64 / per_unit).exp().round() as u64)
        .map(|n| n.clamp(lo, hi))
        .collect();
    out.push(hi);
    out.dedup();
    Ok(out)
}
