//! Exact survivor distributions and the survival recurrence.
//!
//! `xi_n` is the number of players nobody shot in one round of `n` players.
//! Its distribution comes from the exchangeable-indicator mixed moments via
//! inclusion-exclusion, evaluated in exact integer arithmetic over the common
//! denominator `(n-1)^n`. The survival probabilities then follow from
//! `p_n = sum_k p_k P(xi_n = k)` with `p_0 = 0`, `p_1 = 1`, `p_2 = 0`.

mod moments;
mod pmf;
mod recurrence;

pub use moments::{asymptotic_residual, exact_moments, limit_variance, mean_fraction_f64};
pub use pmf::{brute_force_pmf, mixed_moment, survivor_pmf, waring_weight, SurvivorPmf};
pub use recurrence::{
    p_recurrence, CertifiedConfig, Recurrence, RecurrenceMode, TruncationCertificate, WindowPolicy,
};

/// Largest `n` the exhaustive oracle accepts: `(n-1)^n` profiles.
pub const BRUTE_FORCE_MAX_N: u64 = 8;

/// Size ceilings for the exact and certified engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest `n` for exact survivor pmfs and the exact recurrence.
    pub exact_ceiling: u64,
    /// Largest `N` for the certified recurrence.
    pub certified_ceiling: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            exact_ceiling: 600,
            certified_ceiling: 5000,
        }
    }
}
