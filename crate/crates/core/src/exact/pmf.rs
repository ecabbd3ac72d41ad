use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Limits, BRUTE_FORCE_MAX_N};
use crate::error::{invalid, Error, Result};

/// Exact distribution of first-round survivors: `P(xi_n = k) = weights[k] / denominator`
/// for `k = 0..=n-2`, with `denominator = (n-1)^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivorPmf {
    n: u64,
    weights: Vec<BigUint>,
    denominator: BigUint,
}

impl SurvivorPmf {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn denominator(&self) -> &BigUint {
        &self.denominator
    }

    pub fn probability(&self, k: u64) -> BigRational {
        match self.weights.get(k as usize) {
            Some(w) => ratio(w, &self.denominator),
            None => BigRational::zero(),
        }
    }

    pub fn probabilities_f64(&self) -> Vec<f64> {
        let d = BigInt::from(self.denominator.clone());
        self.weights
            .iter()
            .map(|w| crate::series::ratio_to_f64(&BigInt::from(w.clone()), &d))
            .collect()
    }

    pub fn total(&self) -> BigUint {
        self.weights.iter().sum()
    }

    /// `E[xi_n (xi_n - 1) ... (xi_n - r + 1)]`, exactly.
    pub fn factorial_moment(&self, r: u64) -> BigRational {
        let mut acc = BigUint::zero();
        for (k, w) in self.weights.iter().enumerate() {
            let k = k as u64;
            if k < r {
                continue;
            }
            let falling: BigUint = (0..r).map(|i| BigUint::from(k - i)).product();
            acc += falling * w;
        }
        ratio(&acc, &self.denominator)
    }

    pub fn mean(&self) -> BigRational {
        self.factorial_moment(1)
    }

    pub fn variance(&self) -> BigRational {
        let m = self.mean();
        self.factorial_moment(2) + &m - &m * &m
    }
}

fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(
        BigInt::from_biguint(Sign::Plus, num.clone()),
        BigInt::from_biguint(Sign::Plus, den.clone()),
    )
}

fn pow(base: u64, exp: u64) -> BigUint {
    BigUint::from(base).pow(exp as u32)
}

/// `E(Y_1 ... Y_l) = ((n-l)/(n-1))^l ((n-l-1)/(n-1))^(n-l)`: the probability that a
/// given set of `l` players all survive the round.
pub fn mixed_moment(n: u64, l: u64) -> Result<BigRational> {
    if n < 2 {
        return Err(invalid(format!("mixed moment needs n >= 2, got {n}")));
    }
    if l < 1 || l > n - 1 {
        return Err(invalid(format!(
            "mixed moment needs 1 <= l <= n-1, got l = {l}, n = {n}"
        )));
    }
    Ok(ratio(
        &(pow(n - l, l) * pow(n - l - 1, n - l)),
        &pow(n - 1, n),
    ))
}

/// `S_l = C(n,l) (n-l)^l (n-l-1)^(n-l)` for `l = 0..=n-2`; `S_l / (n-1)^n = E[C(xi_n, l)]`.
fn binomial_moment_numerators(n: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity((n - 1) as usize);
    let mut binom = BigUint::one();
    for l in 0..=n - 2 {
        out.push(&binom * pow(n - l, l) * pow(n - l - 1, n - l));
        binom = binom * (n - l) / (l + 1);
    }
    out
}

/// Single inclusion-exclusion weight
/// `w_k = sum_{l=k}^{n-2} (-1)^(l-k) C(l,k) S_l`, so that `P(xi_n = k) = w_k / (n-1)^n`.
///
/// Evaluated term by term; [`survivor_pmf`] produces all weights at once far
/// more cheaply.
pub fn waring_weight(n: u64, k: u64) -> Result<BigUint> {
    if n < 2 {
        return Err(invalid(format!(
            "survivor distribution needs n >= 2, got {n}"
        )));
    }
    if k > n - 2 {
        return Ok(BigUint::zero());
    }
    let s = binomial_moment_numerators(n);
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    let mut c = BigUint::one(); // C(l, k), starting at l = k
    for l in k..=n - 2 {
        let term = &c * &s[l as usize];
        if (l - k) % 2 == 0 {
            pos += term;
        } else {
            neg += term;
        }
        c = c * (l + 1) / (l + 1 - k);
    }
    Ok(pos - neg)
}

/// Exact distribution of `xi_n` over `{0, ..., n-2}`.
///
/// The weights `w_k` are the coefficients of `Q(z - 1)` where
/// `Q(u) = sum_l S_l u^l`, obtained by an in-place Taylor shift that uses
/// only big-integer subtractions. Rejects `n` above `limits.exact_ceiling`.
pub fn survivor_pmf(n: u64, limits: &Limits) -> Result<SurvivorPmf> {
    if n < 2 {
        return Err(invalid(format!(
            "survivor distribution needs n >= 2, got {n}"
        )));
    }
    if n > limits.exact_ceiling {
        return Err(Error::ResourceLimit {
            what: "exact survivor distribution",
            n,
            ceiling: limits.exact_ceiling,
        });
    }
    Ok(survivor_pmf_unchecked(n))
}

pub(crate) fn survivor_pmf_unchecked(n: u64) -> SurvivorPmf {
    let mut a: Vec<BigInt> = binomial_moment_numerators(n)
        .into_iter()
        .map(BigInt::from)
        .collect();
    let deg = a.len() - 1;
    for i in 0..deg {
        for j in (i..deg).rev() {
            let (lo, hi) = a.split_at_mut(j + 1);
            lo[j] -= &hi[0];
        }
    }
    let weights = a
        .into_iter()
        .map(|w| w.to_biguint().expect("survivor weights are nonnegative"))
        .collect();
    SurvivorPmf {
        n,
        weights,
        denominator: pow(n - 1, n),
    }
}

/// Enumerates all `(n-1)^n` equally likely target profiles and counts the
/// untargeted players in each. Independent oracle for [`survivor_pmf`].
pub fn brute_force_pmf(n: u64) -> Result<SurvivorPmf> {
    if n < 2 {
        return Err(invalid(format!(
            "survivor distribution needs n >= 2, got {n}"
        )));
    }
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::ResourceLimit {
            what: "brute-force enumeration",
            n,
            ceiling: BRUTE_FORCE_MAX_N,
        });
    }
    let n = n as usize;
    let mut counts = vec![0u64; n + 1];
    // offsets[i] in 1..n: player i shoots player (i + offsets[i]) mod n
    let mut offsets = vec![1usize; n];
    loop {
        let mut hit = 0u32;
        for (i, &o) in offsets.iter().enumerate() {
            hit |= 1 << ((i + o) % n);
        }
        counts[n - hit.count_ones() as usize] += 1;

        let mut i = 0;
        loop {
            if i == n {
                let total: u64 = counts.iter().sum();
                debug_assert_eq!(counts[n - 1] + counts[n], 0);
                let weights = counts[..n - 1].iter().map(|&c| BigUint::from(c)).collect();
                return Ok(SurvivorPmf {
                    n: n as u64,
                    weights,
                    denominator: BigUint::from(total),
                });
            }
            if offsets[i] < n - 1 {
                offsets[i] += 1;
                break;
            }
            offsets[i] = 1;
            i += 1;
        }
    }
}
