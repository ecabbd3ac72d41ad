//! Survival probabilities `p_n` from the recurrence, exact and certified.
//!
//! The certified run to 1000 takes about twenty seconds in release mode.

use roulette_lab::exact::{p_recurrence, CertifiedConfig, Limits, RecurrenceMode};

fn main() -> roulette_lab::Result<()> {
    let limits = Limits::default();
    let exact = p_recurrence(12, RecurrenceMode::Exact, &limits)?.series;
    for e in exact.entries() {
        println!("p_{:<2} = {:.12}", e.n, e.value_f64());
    }

    // the certified engine reaches far past the exact ceiling
    let cert = p_recurrence(
        1000,
        RecurrenceMode::Certified(CertifiedConfig::default()),
        &limits,
    )?;
    for n in [100u64, 300, 600, 1000] {
        let e = cert.series.get(n).unwrap();
        println!("p_{n:<4} = {:.15} +- {:.1e}", e.value_f64(), e.error());
    }
    println!("flagged entries: {}", cert.flagged.len());
    Ok(())
}
