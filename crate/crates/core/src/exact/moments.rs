use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{invalid, Result};

fn frac_pow(num: u64, den: u64, exp: u64) -> BigRational {
    BigRational::new(
        BigInt::from(num).pow(exp as u32),
        BigInt::from(den).pow(exp as u32),
    )
}

/// Exact `(E(xi_n / n), Var(xi_n / n))` from the closed forms
///
/// ```text
/// E   = ((n-2)/(n-1))^(n-1)
/// Var = E/n + (n-1)/n ((n-2)/(n-1))^2 ((n-3)/(n-1))^(n-2) - E^2
/// ```
pub fn exact_moments(n: u64) -> Result<(BigRational, BigRational)> {
    if n < 3 {
        return Err(invalid(format!("closed-form moments need n >= 3, got {n}")));
    }
    let mean = frac_pow(n - 2, n - 1, n - 1);
    let nn = BigRational::from_integer(n.into());
    let pair = frac_pow(n - 2, n - 1, 2) * frac_pow(n - 3, n - 1, n - 2);
    let var = &mean / &nn + BigRational::new((n - 1).into(), n.into()) * pair - &mean * &mean;
    Ok((mean, var))
}

/// `1/e - 2/e^2`, the limiting value of `n Var(xi_n / n)`.
pub fn limit_variance() -> f64 {
    let e1 = (-1.0f64).exp();
    e1 - 2.0 * e1 * e1
}

/// `((n-2)/(n-1))^(n-1)` in floating point without cancellation, `n >= 3`.
pub fn mean_fraction_f64(n: u64) -> f64 {
    let m = (n - 1) as f64;
    (m * (-1.0 / m).ln_1p()).exp()
}

/// `((n-a)/(n-b))^(n-c) - e^(b-a) (1 - (a-b)(a+b-2c)/(2n))`.
///
/// The remainder of the two-term expansion, which is `O(n^-2)`. For large `n`
/// the log of the power is expanded as a series in `1/n` so the cancelling
/// leading terms are removed analytically rather than subtracted in floating
/// point; the result keeps near full relative precision even when it is
/// fifteen orders of magnitude below the power itself.
pub fn asymptotic_residual(n: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    if !(n.is_finite() && a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(invalid("asymptotic residual needs finite arguments"));
    }
    if n <= a.max(b) {
        return Err(invalid(format!(
            "asymptotic residual needs n > max(a, b), got n = {n}"
        )));
    }
    let x = 1.0 / n;
    let scale = (b - a).exp();
    if a.abs().max(b.abs()) * x > 0.25 {
        let power = ((n - c) * ((-a * x).ln_1p() - (-b * x).ln_1p())).exp();
        return Ok(power - scale * (1.0 - (a - b) * (a + b - 2.0 * c) * x / 2.0));
    }
    // (n - c) ln((n-a)/(n-b)) = (b - a) + sum_{m>=1} d_m x^m with
    // d_m = -(a^(m+1) - b^(m+1))/(m+1) + c (a^m - b^m)/m, and d_1 x is the
    // first-order term of the expansion.
    let (ax, bx) = (a * x, b * x);
    let (mut pa, mut pb) = (ax, bx); // (a x)^m, (b x)^m
    let mut first = 0.0;
    let mut rest = 0.0;
    for m in 1..400 {
        let mf = m as f64;
        let term = -(a * pa - b * pb) / (mf + 1.0) + c * (pa - pb) / mf;
        if m == 1 {
            first = term;
        } else {
            rest += term;
            if term.abs() <= 1e-18 * (rest.abs() + first.abs()) {
                break;
            }
        }
        pa *= ax;
        pb *= bx;
    }
    let delta = first + rest;
    Ok(scale * (rest + expm1_minus_x(delta)))
}

/// `e^d - 1 - d`.
fn expm1_minus_x(d: f64) -> f64 {
    if d.abs() > 0.5 {
        return d.exp_m1() - d;
    }
    let mut term = d * d / 2.0;
    let mut sum = 0.0;
    for k in 3..60 {
        sum += term;
        term *= d / k as f64;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(exact_moments(4).unwrap(), (q(8, 27), q(17, 729)));
        assert_eq!(exact_moments(3).unwrap().0, q(1, 4));
        assert!(exact_moments(2).is_err());
    }

    #[test]
    fn limit_constant() {
        assert!((limit_variance() - 0.097_208_874_7).abs() < 1e-10);
    }

    #[test]
    fn residual_vanishes_when_a_equals_b() {
        for n in [3.0, 10.0, 1e3, 1e6] {
            assert_eq!(asymptotic_residual(n, 1.5, 1.5, 0.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn residual_precondition() {
        assert!(asymptotic_residual(2.0, 2.0, 1.0, 0.0).is_err());
        assert!(asymptotic_residual(1.5, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn expm1_minus_x_agrees_with_direct_form() {
        for d in [-0.4f64, 0.2, 0.49, 0.7, 2.0] {
            let direct = d.exp_m1() - d;
            assert!(
                (expm1_minus_x(d) - direct).abs() <= 1e-14 * direct.abs(),
                "{d}"
            );
        }
        // direct subtraction loses digits here; compare with the Taylor polynomial to d^5
        for d in [-1e-3f64, 1e-6] {
            let taylor = d * d / 2.0 + d * d * d / 6.0 + d * d * d * d / 24.0 + d.powi(5) / 120.0;
            assert!(
                (expm1_minus_x(d) - taylor).abs() <= 1e-14 * taylor.abs(),
                "{d}"
            );
        }
    }
}
