//! Monte Carlo simulation of the roulette game.
//!
//! Each repetition draws from its own counter-based stream (see [`crate::rng`])
//! and all reductions are over exact integers, so every result is
//! bit-identical for a given seed regardless of the rayon thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exact::{limit_variance, mean_fraction_f64};
use crate::rng::{stream, Domain};

/// A Monte Carlo point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub point: f64,
    pub stderr: f64,
    pub reps: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn bernoulli(successes: u64, reps: u64, seed: u64) -> Self {
        let point = successes as f64 / reps as f64;
        McEstimate {
            point,
            stderr: (point * (1.0 - point) / reps as f64).sqrt(),
            reps,
            seed,
        }
    }

    /// Sample mean and its standard error from exact integer sums.
    fn from_sums(sum: u128, sum_sq: u128, reps: u64, seed: u64) -> Self {
        let r = reps as u128;
        let point = sum as f64 / reps as f64;
        let stderr = if reps > 1 {
            let ss = (r * sum_sq - sum * sum) as f64 / (r * (r - 1)) as f64;
            (ss / reps as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            point,
            stderr,
            reps,
            seed,
        }
    }

    pub fn within(&self, truth: f64, sigmas: f64) -> bool {
        (self.point - truth).abs() <= sigmas * self.stderr
    }
}

/// One simulated round, with the self-shooting urn variant coupled to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundSample {
    pub alive_before: u64,
    /// `targets[i]` is how far to the right player `i` shot, in `1..alive_before`.
    pub targets: Vec<u32>,
    /// Players nobody shot.
    pub survivors: u64,
    /// Untargeted players when self-shots are allowed (empty urns).
    pub urn_survivors: u64,
    /// Self-shooters in the urn variant.
    pub eta: u64,
}

impl RoundSample {
    pub fn coupling_holds(&self) -> bool {
        self.survivors.abs_diff(self.urn_survivors) <= self.eta
    }
}

fn uniform_other(rng: &mut ChaCha8Rng, alive: u32, me: u32) -> u32 {
    let j = rng.random_range(0..alive - 1);
    j + u32::from(j >= me)
}

/// One round among `alive` players.
///
/// Each player first picks an urn uniformly among all `alive` players
/// (self included); self-pickers are then redirected uniformly among the
/// others. The redirected choices are the game's targets, uniform over the
/// other players, and the raw picks are the urn variant on the same draws.
pub fn simulate_round(alive: u64, rng: &mut ChaCha8Rng) -> Result<RoundSample> {
    if alive < 2 {
        return Err(invalid(format!(
            "a round needs at least 2 players, got {alive}"
        )));
    }
    let a = u32::try_from(alive).map_err(|_| invalid("too many players"))?;
    let mut hit = vec![false; a as usize];
    let mut urn_hit = vec![false; a as usize];
    let mut targets = Vec::with_capacity(a as usize);
    let mut eta = 0;
    for i in 0..a {
        let pick = rng.random_range(0..a);
        urn_hit[pick as usize] = true;
        let target = if pick == i {
            eta += 1;
            uniform_other(rng, a, i)
        } else {
            pick
        };
        hit[target as usize] = true;
        targets.push((target + a - i) % a);
    }
    let count = |v: &[bool]| v.iter().filter(|h| !**h).count() as u64;
    Ok(RoundSample {
        alive_before: alive,
        targets,
        survivors: count(&hit),
        urn_survivors: count(&urn_hit),
        eta,
    })
}

/// Survivor count of one round; `hits` is scratch space of length `>= alive`.
fn round_survivors(alive: u32, rng: &mut ChaCha8Rng, hits: &mut [u8]) -> u32 {
    let hits = &mut hits[..alive as usize];
    hits.fill(0);
    for i in 0..alive {
        hits[uniform_other(rng, alive, i) as usize] = 1;
    }
    alive - hits.iter().map(|&h| h as u32).sum::<u32>()
}

fn play(n: u64, rng: &mut ChaCha8Rng, hits: &mut Vec<u8>) -> bool {
    let mut alive = n as u32;
    if hits.len() < alive as usize {
        hits.resize(alive as usize, 0);
    }
    // survivors are exchangeable, so only their number carries over
    while alive > 1 {
        alive = round_survivors(alive, rng, hits);
    }
    alive == 1
}

/// Plays rounds until at most one player is left; true iff exactly one survives.
pub fn simulate_game(n: u64, rng: &mut ChaCha8Rng) -> bool {
    assert!(n <= u32::MAX as u64, "player count must fit in u32");
    play(n, rng, &mut Vec::new())
}

/// Monte Carlo estimate of `p_n` from `reps` independent games.
pub fn estimate_p(n: u64, reps: u64, seed: u64) -> Result<McEstimate> {
    if reps == 0 {
        return Err(invalid("estimate needs at least one repetition"));
    }
    if n > u32::MAX as u64 {
        return Err(invalid("player count must fit in u32"));
    }
    let wins: u64 = (0..reps)
        .into_par_iter()
        .map_init(Vec::new, |hits, r| {
            u64::from(play(n, &mut stream(seed, Domain::Game, r), hits))
        })
        .sum();
    Ok(McEstimate::bernoulli(wins, reps, seed))
}

/// First-round survivor counts for `reps` independent rounds of `n` players.
pub fn sample_survivors(n: u64, reps: u64, seed: u64) -> Result<Vec<u32>> {
    if n < 2 {
        return Err(invalid(format!(
            "a round needs at least 2 players, got {n}"
        )));
    }
    let a = u32::try_from(n).map_err(|_| invalid("player count must fit in u32"))?;
    Ok((0..reps)
        .into_par_iter()
        .map_init(
            || vec![0u8; a as usize],
            |hits, r| round_survivors(a, &mut stream(seed, Domain::Round, r), hits),
        )
        .collect())
}

/// What `xi_n` is centred on when standardizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentrePolicy {
    /// `E(xi_n) = n ((n-2)/(n-1))^(n-1)`.
    FiniteMean,
    /// `n / e`.
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub centre_policy: CentrePolicy,
    pub centre: f64,
    /// `1/e - 2/e^2`.
    pub limit_variance: f64,
    /// Mean of `(xi_n - centre) / sqrt(n (1/e - 2/e^2))`.
    pub standardized_mean: f64,
    /// Sample variance of the standardized values (target 1).
    pub variance_ratio: f64,
    /// `4 / sqrt(reps)`.
    pub mean_tolerance: f64,
}

impl CltReport {
    /// Standardized mean within `mean_tolerance` and variance ratio in `[0.95, 1.05]`.
    pub fn pass(&self) -> bool {
        self.standardized_mean.abs() <= self.mean_tolerance
            && (0.95..=1.05).contains(&self.variance_ratio)
    }
}

/// Compares sampled `xi_n` with the normal limit `N(0, 1/e - 2/e^2)` of
/// `sqrt(n)(xi_n/n - 1/e)`.
pub fn clt_check(n: u64, reps: u64, seed: u64, centre_policy: CentrePolicy) -> Result<CltReport> {
    if n < 10 {
        return Err(invalid(format!(
            "the normal approximation is degenerate for n < 10, got {n}"
        )));
    }
    if reps < 2 {
        return Err(invalid("clt check needs at least two repetitions"));
    }
    let xs = sample_survivors(n, reps, seed)?;
    let (sum, sum_sq) = int_sums(&xs);
    let r = reps as u128;
    let mean = sum as f64 / reps as f64;
    let var = (r * sum_sq - sum * sum) as f64 / (r * (r - 1)) as f64;
    let centre = match centre_policy {
        CentrePolicy::FiniteMean => n as f64 * mean_fraction_f64(n),
        CentrePolicy::Limit => n as f64 / std::f64::consts::E,
    };
    let target = n as f64 * limit_variance();
    Ok(CltReport {
        n,
        reps,
        seed,
        centre_policy,
        centre,
        limit_variance: limit_variance(),
        standardized_mean: (mean - centre) / target.sqrt(),
        variance_ratio: var / target,
        mean_tolerance: 4.0 / (reps as f64).sqrt(),
    })
}

fn int_sums(xs: &[u32]) -> (u128, u128) {
    xs.iter().fold((0u128, 0u128), |(s, q), &x| {
        let x = x as u128;
        (s + x, q + x * x)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McDiarmidRow {
    pub epsilon: f64,
    /// Fraction of rounds with `|xi_n - E(xi_n)| >= epsilon`.
    pub empirical: f64,
    /// `2 exp(-2 epsilon^2 / n)`.
    pub bound: f64,
    /// Binomial standard error at `p = min(bound, 1)`.
    pub stderr: f64,
    /// Empirical exceeds the bound by more than 4 standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McDiarmidTable {
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub mean: f64,
    pub rows: Vec<McDiarmidRow>,
}

impl McDiarmidTable {
    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }
}

/// Empirical tails of `xi_n` against the bounded-differences bound
/// `P(|xi_n - E xi_n| >= eps) <= 2 exp(-2 eps^2 / n)`.
pub fn mcdiarmid_check(n: u64, reps: u64, epsilons: &[f64], seed: u64) -> Result<McDiarmidTable> {
    if reps == 0 {
        return Err(invalid("tail check needs at least one repetition"));
    }
    if n < 3 {
        return Err(invalid(format!("tail check needs n >= 3, got {n}")));
    }
    if epsilons.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(invalid("epsilons must be finite and nonnegative"));
    }
    let xs = sample_survivors(n, reps, seed)?;
    let mean = n as f64 * mean_fraction_f64(n);
    let rows = epsilons
        .iter()
        .map(|&eps| {
            let count = xs
                .iter()
                .filter(|&&x| (x as f64 - mean).abs() >= eps)
                .count();
            let empirical = count as f64 / reps as f64;
            let bound = 2.0 * (-2.0 * eps * eps / n as f64).exp();
            let p = bound.min(1.0);
            let stderr = (p * (1.0 - p) / reps as f64).sqrt();
            McDiarmidRow {
                epsilon: eps,
                empirical,
                bound,
                stderr,
                flagged: empirical > bound + 4.0 * stderr,
            }
        })
        .collect();
    Ok(McDiarmidTable {
        n,
        reps,
        seed,
        mean,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub n: u64,
    pub rounds: u64,
    pub seed: u64,
    /// Rounds where `|xi - xi'| > eta`; must be zero.
    pub violations: u64,
    pub eta: McEstimate,
    pub survivors: McEstimate,
    pub urn_survivors: McEstimate,
    /// `n (1 - 1/n)^n`, the expected number of empty urns.
    pub urn_mean_theory: f64,
}

impl CouplingReport {
    /// No coupling violation and the mean of `eta` within four standard errors of 1.
    pub fn pass(&self) -> bool {
        self.violations == 0 && self.eta.within(1.0, 4.0)
    }
}

/// Runs `rounds` coupled rounds of `n` players and tallies the coupling
/// inequality, the self-shooter count and both survivor counts.
pub fn coupling_check(n: u64, rounds: u64, seed: u64) -> Result<CouplingReport> {
    if rounds == 0 {
        return Err(invalid("coupling check needs at least one round"));
    }
    if n < 2 {
        return Err(invalid(format!(
            "a round needs at least 2 players, got {n}"
        )));
    }
    type Acc = [u128; 7];
    let acc: Acc = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let s = simulate_round(n, &mut stream(seed, Domain::Coupling, r))
                .expect("n >= 2 checked above");
            let (x, u, e) = (s.survivors as u128, s.urn_survivors as u128, s.eta as u128);
            [
                u128::from(!s.coupling_holds()),
                e,
                e * e,
                x,
                x * x,
                u,
                u * u,
            ]
        })
        .reduce(|| [0; 7], |a, b| std::array::from_fn(|i| a[i] + b[i]));
    let nf = n as f64;
    Ok(CouplingReport {
        n,
        rounds,
        seed,
        violations: acc[0] as u64,
        eta: McEstimate::from_sums(acc[1], acc[2], rounds, seed),
        survivors: McEstimate::from_sums(acc[3], acc[4], rounds, seed),
        urn_survivors: McEstimate::from_sums(acc[5], acc[6], rounds, seed),
        urn_mean_theory: nf * (nf * (-1.0 / nf).ln_1p()).exp(),
    })
}

/// Sample mean of the self-shooter count `eta` over `reps` urn-variant rounds.
pub fn eta_mean(n: u64, reps: u64, seed: u64) -> Result<McEstimate> {
    Ok(coupling_check(n, reps, seed)?.eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_players_always_die() {
        for r in 0..100 {
            let mut rng = stream(1, Domain::Round, r);
            let s = simulate_round(2, &mut rng).unwrap();
            assert_eq!(s.survivors, 0);
            assert_eq!(s.targets, vec![1, 1]);
            assert!(!simulate_game(2, &mut rng));
            assert!(simulate_game(1, &mut rng));
            assert!(!simulate_game(0, &mut rng));
        }
    }

    #[test]
    fn round_invariants() {
        for alive in [2u64, 3, 5, 17, 64] {
            for r in 0..200 {
                let s = simulate_round(alive, &mut stream(9, Domain::Round, r)).unwrap();
                assert!(s.survivors <= alive - 2);
                assert!(s.targets.iter().all(|&t| t >= 1 && (t as u64) < alive));
                assert!(s.coupling_holds());
                // survivors recomputed from the offsets
                let mut hit = vec![false; alive as usize];
                for (i, &t) in s.targets.iter().enumerate() {
                    hit[(i + t as usize) % alive as usize] = true;
                }
                assert_eq!(hit.iter().filter(|h| !**h).count() as u64, s.survivors);
            }
        }
        assert!(simulate_round(1, &mut stream(0, Domain::Round, 0)).is_err());
    }

    #[test]
    fn estimates_are_reproducible_and_trivial_cases_exact() {
        let one = estimate_p(1, 10, 5).unwrap();
        assert_eq!((one.point, one.stderr), (1.0, 0.0));
        assert_eq!(estimate_p(2, 10, 5).unwrap().point, 0.0);
        assert_eq!(
            estimate_p(40, 2000, 11).unwrap(),
            estimate_p(40, 2000, 11).unwrap()
        );
        assert!(estimate_p(5, 0, 1).is_err());
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (
                        estimate_p(30, 3000, 77).unwrap(),
                        coupling_check(25, 3000, 77).unwrap(),
                        sample_survivors(50, 500, 77).unwrap(),
                    )
                })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn clt_rejects_small_n() {
        assert!(clt_check(2, 100, 1, CentrePolicy::FiniteMean).is_err());
        assert!(clt_check(9, 100, 1, CentrePolicy::FiniteMean).is_err());
    }

    #[test]
    fn mcdiarmid_trivial_rows() {
        let t = mcdiarmid_check(100, 1000, &[0.0, 30.0], 3).unwrap();
        assert_eq!(t.rows[0].bound, 2.0);
        assert_eq!(t.rows[0].empirical, 1.0);
        assert!((t.rows[1].bound - 2.0 * (-18.0f64).exp()).abs() < 1e-20);
        assert!((t.rows[1].bound - 3.05e-8).abs() < 1e-10);
        assert!(!t.any_flagged());
    }

    #[test]
    fn eta_for_two_players() {
        // each of two players self-targets with probability 1/2
        let e = eta_mean(2, 20_000, 4).unwrap();
        assert!(e.within(1.0, 4.0), "{e:?}");
    }
}
