//! Monte Carlo of the game: survival estimates, the one-round CLT and the urn coupling.

use roulette_lab::exact::{p_recurrence, Limits, RecurrenceMode};
use roulette_lab::rng::DEFAULT_SEED;
use roulette_lab::sim::{clt_check, coupling_check, estimate_p, CentrePolicy};

fn main() -> roulette_lab::Result<()> {
    let exact = p_recurrence(100, RecurrenceMode::Exact, &Limits::default())?.series;
    for n in [5u64, 20, 100] {
        let est = estimate_p(n, 100_000, DEFAULT_SEED)?;
        let truth = exact.get(n).unwrap().value_f64();
        println!(
            "n = {n:>3}: {:.4} +- {:.4}  exact {truth:.4}",
            est.point, est.stderr
        );
    }

    let clt = clt_check(2_000, 4_000, DEFAULT_SEED, CentrePolicy::FiniteMean)?;
    println!(
        "clt n = 2000: standardized mean {:.3}, variance ratio {:.3}",
        clt.standardized_mean, clt.variance_ratio
    );

    let c = coupling_check(100, 20_000, DEFAULT_SEED)?;
    println!(
        "coupling n = 100: {} violations, mean eta {:.3}, urn survivors {:.3} (theory {:.3})",
        c.violations, c.eta.point, c.urn_survivors.point, c.urn_mean_theory
    );
    Ok(())
}
