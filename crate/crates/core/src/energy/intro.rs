use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PairedSample;
use crate::error::{invalid, Result};
use crate::rng::{stream, Domain};

/// The density `p(x, y) = 1/4 - q(x) q(y)` on `[-1, 1]^2`, with
/// `q = -c/2` on `[-1, 0]`, `1/2` on `(0, c]` and `0` elsewhere.
///
/// Both marginals are uniform and `|X - X'|`, `|Y - Y'|` are uncorrelated,
/// yet `X` and `Y` are dependent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntroDensity {
    pub c: f64,
}

impl Default for IntroDensity {
    fn default() -> Self {
        IntroDensity {
            c: std::f64::consts::SQRT_2 - 1.0,
        }
    }
}

impl IntroDensity {
    pub fn q(&self, x: f64) -> f64 {
        if (-1.0..=0.0).contains(&x) {
            -self.c / 2.0
        } else if x > 0.0 && x <= self.c {
            0.5
        } else {
            0.0
        }
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        if x.abs() > 1.0 || y.abs() > 1.0 {
            return 0.0;
        }
        0.25 - self.q(x) * self.q(y)
    }

    /// Maximum of the density, reached where `q(x) q(y) = -c/4`.
    pub fn envelope(&self) -> f64 {
        0.25 + self.c / 4.0
    }

    /// Probability that a uniform proposal on the square is accepted.
    pub fn acceptance_rate(&self) -> f64 {
        1.0 / (4.0 * self.envelope())
    }

    /// `m` iid draws by rejection from the uniform proposal on `[-1, 1]^2`;
    /// draw `i` uses its own stream.
    pub fn sample(&self, m: usize, seed: u64) -> Result<PairedSample> {
        if m == 0 {
            return Err(invalid("sample size must be >= 1"));
        }
        let env = self.envelope();
        let pts: Vec<(f64, f64)> = (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, Domain::Sampler, i);
                loop {
                    let x = rng.random_range(-1.0..=1.0);
                    let y = rng.random_range(-1.0..=1.0);
                    if rng.random::<f64>() * env < self.density(x, y) {
                        return (x, y);
                    }
                }
            })
            .collect();
        PairedSample::new(
            pts.iter().map(|p| p.0).collect(),
            pts.iter().map(|p| p.1).collect(),
        )
    }
}
