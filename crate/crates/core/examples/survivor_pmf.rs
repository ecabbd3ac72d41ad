//! Exact distribution of the number of survivors after one round.
//!
//! `cargo run --release --example survivor_pmf -- 12`

use roulette_lab::exact::{exact_moments, limit_variance, survivor_pmf, Limits};

fn main() -> roulette_lab::Result<()> {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(12);
    let pmf = survivor_pmf(n, &Limits::default())?;
    println!("survivors after one round of {n} players");
    for k in 0..pmf.weights().len() as u64 {
        let p = pmf.probability(k);
        println!(
            "  P(xi = {k:>2}) = {:<28} ~ {:.6}",
            p.to_string(),
            to_f64(&p)
        );
    }
    if n >= 3 {
        let (mean, var) = exact_moments(n)?;
        println!("E(xi / n) = {mean}");
        println!(
            "          ~ {:.6}  (1/e = {:.6})",
            to_f64(&mean),
            (-1f64).exp()
        );
        println!(
            "n Var(xi / n) ~ {:.6}  (limit {:.6})",
            n as f64 * to_f64(&var),
            limit_variance()
        );
    }
    Ok(())
}

fn to_f64(r: &num_rational::BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
