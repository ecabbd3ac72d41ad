//! Computational laboratory for the Hungarian roulette survival game and two
//! companion problems from classical probability.
//!
//! * [`exact`]: exact survivor distributions, the survival recurrence for
//!   `p_n` (exact rationals or certified fixed point), closed-form moments.
//! * [`sim`]: seeded, thread-count-invariant Monte Carlo of the game, the
//!   self-shooting urn variant and its coupling.
//! * [`merging`]: the `p_n` series on the log-`n` axis, wave detection, the
//!   wave-decay fit and fixed-phase subsequence probes.
//! * [`energy`]: distance covariance/correlation and the symmetrized
//!   absolute-difference counterexample density.
//! * [`analytic`]: numerical checks of the exponential/normal functional
//!   equation and of the characteristic-function counterexample.
//! * [`cli`]: the `roulette` command line and the SVG plot emitter.

pub mod analytic;
pub mod cli;
pub mod energy;
pub mod error;
pub mod exact;
pub mod merging;
pub mod rng;
pub mod series;
pub mod sim;

pub use error::{Error, Result};
pub use series::{PEntry, PSeries, PValue, Provenance};
