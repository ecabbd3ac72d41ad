use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::moments::mean_fraction_f64;
use super::pmf::survivor_pmf_unchecked;
use super::Limits;
use crate::error::{Error, Result};
use crate::series::{ratio_to_f64, PEntry, PSeries, PValue};

/// Which survivor counts enter the recurrence sum for a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WindowPolicy {
    /// Every `k` in `0..=n-2`.
    Full,
    /// `k` within `n/e ± ceil(multiplier sqrt(n ln n))`, clipped to `0..=n-2`.
    Sigma { multiplier: f64 },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Sigma { multiplier: 3.0 }
    }
}

impl WindowPolicy {
    pub fn window(&self, n: u64) -> (u64, u64) {
        let top = n.saturating_sub(2);
        match *self {
            WindowPolicy::Full => (0, top),
            WindowPolicy::Sigma { multiplier } => {
                let nf = n as f64;
                let half = (multiplier * (nf * nf.ln()).sqrt()).ceil();
                let centre = nf / std::f64::consts::E;
                let lo = (centre - half).floor().max(0.0) as u64;
                let hi = ((centre + half).ceil().max(0.0) as u64).min(top);
                (lo.min(top), hi)
            }
        }
    }
}

/// Certified bound on the survivor probability mass left out of the
/// recurrence sum at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCertificate {
    pub n: u64,
    pub window: (u64, u64),
    /// `2 exp(-2 eps^2 / n)` with `eps` the distance from `E(xi_n)` to the
    /// nearer window edge that actually cuts the support; `0` when nothing is cut.
    pub mcdiarmid_bound: f64,
    /// Exact omitted mass, rounded up.
    pub exact_tail: f64,
    /// `min(mcdiarmid_bound, exact_tail)`.
    pub tail_bound: f64,
}

impl TruncationCertificate {
    fn new(n: u64, window: (u64, u64), mean: f64, exact_tail: f64) -> Self {
        let top = n - 2;
        let mut eps = f64::INFINITY;
        if window.0 > 0 {
            eps = eps.min(mean - window.0 as f64);
        }
        if window.1 < top {
            eps = eps.min(window.1 as f64 - mean);
        }
        let mcdiarmid_bound = if eps.is_infinite() {
            0.0
        } else if eps <= 0.0 {
            1.0
        } else {
            (2.0 * (-2.0 * eps * eps / n as f64).exp()).min(1.0)
        };
        TruncationCertificate {
            n,
            window,
            mcdiarmid_bound,
            exact_tail,
            tail_bound: mcdiarmid_bound.min(exact_tail),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedConfig {
    /// Fractional bits of the fixed-point accumulator (at least 64).
    pub precision_bits: u32,
    pub window: WindowPolicy,
    /// Entries whose certified radius exceeds this are flagged.
    pub radius_threshold: f64,
}

impl Default for CertifiedConfig {
    fn default() -> Self {
        CertifiedConfig {
            precision_bits: 128,
            window: WindowPolicy::default(),
            radius_threshold: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecurrenceMode {
    Exact,
    Certified(CertifiedConfig),
}

#[derive(Debug, Clone)]
pub struct Recurrence {
    pub series: PSeries,
    /// One per `n >= 3` in certified mode; empty in exact mode.
    pub certificates: Vec<TruncationCertificate>,
    /// `n` values whose certified radius exceeded the threshold.
    pub flagged: Vec<u64>,
}

/// `p_0 ..= p_N` from the survival recurrence.
///
/// Exact mode keeps every `p_k` as a fraction over one shared denominator.
/// Certified mode keeps `p_k` as a floored fixed-point number with
/// `precision_bits` fractional bits, sums only the window of survivor counts
/// selected by the policy, and carries an error radius that adds the
/// flooring error and the certified tail of every step.
pub fn p_recurrence(n_max: u64, mode: RecurrenceMode, limits: &Limits) -> Result<Recurrence> {
    match mode {
        RecurrenceMode::Exact => {
            if n_max > limits.exact_ceiling {
                return Err(Error::ResourceLimit {
                    what: "exact recurrence",
                    n: n_max,
                    ceiling: limits.exact_ceiling,
                });
            }
            Ok(exact_recurrence(n_max))
        }
        RecurrenceMode::Certified(cfg) => {
            if n_max > limits.certified_ceiling {
                return Err(Error::ResourceLimit {
                    what: "certified recurrence",
                    n: n_max,
                    ceiling: limits.certified_ceiling,
                });
            }
            if cfg.precision_bits < 64 {
                return Err(crate::error::invalid(format!(
                    "precision must be at least 64 bits, got {}",
                    cfg.precision_bits
                )));
            }
            Ok(certified_recurrence(n_max, &cfg))
        }
    }
}

fn seeds(n_max: u64) -> Vec<PEntry> {
    (0..=n_max.min(2))
        .map(|n| PEntry::exact(n, BigRational::from_integer(u64::from(n == 1).into())))
        .collect()
}

fn exact_recurrence(n_max: u64) -> Recurrence {
    let mut entries = seeds(n_max);
    // p_k = numer[k] / common
    let mut numer: Vec<BigInt> = vec![BigInt::zero(), BigInt::one(), BigInt::zero()];
    let mut common = BigInt::one();
    for n in 3..=n_max {
        let pmf = survivor_pmf_unchecked(n);
        let mut acc = BigInt::zero();
        for (k, w) in pmf.weights().iter().enumerate().skip(1) {
            if !numer[k].is_zero() {
                acc += &numer[k] * BigInt::from(w.clone());
            }
        }
        let den = &common * BigInt::from(pmf.denominator().clone());
        let g = acc.gcd(&den);
        let (num_n, den_n) = if g.is_zero() {
            (BigInt::zero(), BigInt::one())
        } else {
            (&acc / &g, &den / &g)
        };
        let next_common = common.lcm(&den_n);
        let factor = &next_common / &common;
        if !factor.is_one() {
            for a in numer.iter_mut() {
                *a *= &factor;
            }
        }
        numer.push(&num_n * (&next_common / &den_n));
        common = next_common;
        entries.push(PEntry::exact(n, BigRational::new(num_n, den_n)));
    }
    Recurrence {
        series: PSeries::new(entries).expect("recurrence values are probabilities"),
        certificates: Vec::new(),
        flagged: Vec::new(),
    }
}

/// Adds with rounding toward +inf, so radii stay upper bounds.
fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s == 0.0 {
        s
    } else {
        s.next_up()
    }
}

fn certified_recurrence(n_max: u64, cfg: &CertifiedConfig) -> Recurrence {
    let bits = cfg.precision_bits as usize;
    let one = BigUint::one() << bits;
    let ulp = libm::ldexp(1.0, -(cfg.precision_bits as i32));
    let mut entries = seeds(n_max);
    let mut fixed: Vec<BigUint> = vec![BigUint::zero(), one.clone(), BigUint::zero()];
    let mut radius: Vec<f64> = vec![0.0; 3];
    let mut certificates = Vec::new();
    let mut flagged = Vec::new();
    for n in 3..=n_max {
        let pmf = survivor_pmf_unchecked(n);
        let (lo, hi) = cfg.window.window(n);
        let den = pmf.denominator();
        let mut acc = BigUint::zero();
        let mut outside = BigUint::zero();
        let mut worst = 0.0f64;
        for (k, w) in pmf.weights().iter().enumerate() {
            let k64 = k as u64;
            if k64 < lo || k64 > hi {
                outside += w;
                continue;
            }
            acc += &fixed[k] * w;
            worst = worst.max(radius[k]);
        }
        let p_fixed = acc / den;
        let exact_tail = ceil_ratio_f64(&outside, den, bits);
        let mean = n as f64 * mean_fraction_f64(n);
        let cert = TruncationCertificate::new(n, (lo, hi), mean, exact_tail);
        let r = add_up(add_up(worst, ulp), cert.tail_bound);

        let value = ratio_to_f64(&BigInt::from(p_fixed.clone()), &BigInt::from(one.clone()));
        // nearest-f64 rounding of the displayed value
        let shown = add_up(r, value * f64::EPSILON);
        let is_flagged = shown > cfg.radius_threshold;
        if is_flagged {
            flagged.push(n);
        }
        entries.push(PEntry {
            n,
            value: PValue::Certified {
                value,
                radius: shown,
                flagged: is_flagged,
            },
        });
        fixed.push(p_fixed);
        radius.push(r);
        certificates.push(cert);
    }
    Recurrence {
        series: PSeries::new(entries).expect("recurrence values are probabilities"),
        certificates,
        flagged,
    }
}

/// Upper bound on `num / den` as f64, via a `bits`-bit fixed-point ceiling.
fn ceil_ratio_f64(num: &BigUint, den: &BigUint, bits: usize) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let q = ((num << bits) + den - 1u32) / den;
    let v = ratio_to_f64(&BigInt::from(q), &(BigInt::one() << bits));
    // ratio_to_f64 is within 2^-52 relative; push it above.
    (v * (1.0 + 4.0 * f64::EPSILON)).next_up()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rational_to_f64;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn exact_values(n: u64) -> Vec<BigRational> {
        let r = p_recurrence(n, RecurrenceMode::Exact, &Limits::default()).unwrap();
        r.series
            .entries()
            .iter()
            .map(|e| match &e.value {
                PValue::Exact(v) => v.clone(),
                other => panic!("expected exact, got {other:?}"),
            })
            .collect()
    }

    #[test]
    fn seeds_and_first_values() {
        assert_eq!(exact_values(2), vec![q(0, 1), q(1, 1), q(0, 1)]);
        let v = exact_values(5);
        assert_eq!(v[3], q(3, 4));
        assert_eq!(v[4], q(16, 27));
        assert_eq!(v[5], q(15, 32));
        assert_eq!(exact_values(0).len(), 1);
    }

    #[test]
    fn window_policy() {
        assert_eq!(WindowPolicy::Full.window(10), (0, 8));
        let (lo, hi) = WindowPolicy::default().window(600);
        assert!(lo > 0 && hi < 598 && lo < 221 && hi > 220);
        assert_eq!(WindowPolicy::default().window(20), (0, 18));
    }

    #[test]
    fn certified_agrees_with_exact_within_radius() {
        let exact = exact_values(120);
        for window in [WindowPolicy::Full, WindowPolicy::default()] {
            let cfg = CertifiedConfig {
                window,
                ..CertifiedConfig::default()
            };
            let run =
                p_recurrence(120, RecurrenceMode::Certified(cfg), &Limits::default()).unwrap();
            assert!(run.flagged.is_empty());
            for e in run.series.entries() {
                let truth = rational_to_f64(&exact[e.n as usize]);
                assert!((e.value_f64() - truth).abs() <= e.error(), "n={}", e.n);
            }
        }
    }

    #[test]
    fn narrow_window_error_is_covered_by_tails() {
        let exact = exact_values(150);
        let cfg = CertifiedConfig {
            window: WindowPolicy::Sigma { multiplier: 0.3 },
            radius_threshold: 1e-3,
            ..CertifiedConfig::default()
        };
        let run = p_recurrence(150, RecurrenceMode::Certified(cfg), &Limits::default()).unwrap();
        let mut accumulated = 0.0;
        let mut cut_something = false;
        for (e, c) in run.series.entries()[3..].iter().zip(&run.certificates) {
            accumulated += c.tail_bound;
            cut_something |= c.exact_tail > 0.0;
            assert!(c.tail_bound <= c.mcdiarmid_bound);
            // the concentration bound really bounds the omitted mass
            assert!(c.exact_tail <= c.mcdiarmid_bound);
            let truth = rational_to_f64(&exact[e.n as usize]);
            let err = (e.value_f64() - truth).abs();
            assert!(
                err <= accumulated + 1e-12,
                "n={} err={err} acc={accumulated}",
                e.n
            );
            assert!(err <= e.error());
        }
        assert!(cut_something);
        assert!(!run.flagged.is_empty());
    }

    #[test]
    fn ceilings_are_enforced() {
        let lim = Limits {
            exact_ceiling: 20,
            certified_ceiling: 30,
        };
        assert!(p_recurrence(21, RecurrenceMode::Exact, &lim).is_err());
        assert!(p_recurrence(
            30,
            RecurrenceMode::Certified(CertifiedConfig::default()),
            &lim
        )
        .is_ok());
        assert!(p_recurrence(
            31,
            RecurrenceMode::Certified(CertifiedConfig::default()),
            &lim
        )
        .is_err());
        let low = CertifiedConfig {
            precision_bits: 32,
            ..CertifiedConfig::default()
        };
        assert!(p_recurrence(10, RecurrenceMode::Certified(low), &lim).is_err());
    }
}
