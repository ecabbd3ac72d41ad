//! Waves of `p_n` against `ln n` and a fixed-phase subsequence.
//!
//! Takes a minute or so in release mode.

use roulette_lab::exact::{CertifiedConfig, Limits, RecurrenceMode};
use roulette_lab::merging::{
    build_series, detect_waves, fit_wave_decay, log_grid, subsequence_probe, DEFAULT_SMOOTHING,
};
use roulette_lab::rng::DEFAULT_SEED;

fn main() -> roulette_lab::Result<()> {
    let grid = log_grid(400, 200_000, std::f64::consts::PI)?;
    let series = build_series(
        300,
        &grid,
        20_000,
        DEFAULT_SEED,
        RecurrenceMode::Certified(CertifiedConfig::default()),
        &Limits::default(),
    )?;
    let model = detect_waves(&series, DEFAULT_SMOOTHING)?;
    println!("level c = {:.4}", model.c);
    for e in &model.extrema {
        println!(
            "{:?} at ln n = {:.3} +- {:.3}, h = {:+.4}",
            e.kind, e.log_n, e.log_n_err, e.amplitude
        );
    }
    println!("period in ln n ~ {:.3}", model.period());
    match fit_wave_decay(&model) {
        Ok(d) => println!(
            "kappa' = {:.3}, product limit {:.3}",
            d.kappa_prime, d.product_limit
        ),
        Err(e) => println!("no decay fit: {e}"),
    }

    let probe = subsequence_probe(&series, 0.25, 0.05)?;
    println!("phase 0.25 subsequence: {} points", probe.points.len());
    Ok(())
}
