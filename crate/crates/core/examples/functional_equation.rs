//! Residuals of the functional equation for the candidate densities.

use roulette_lab::analytic::{feq_residual, feq_suite, DensityModel, ModelId};

fn main() -> roulette_lab::Result<()> {
    for id in [
        ModelId::Exponential,
        ModelId::NormalHalfVar,
        ModelId::HalfNormal,
    ] {
        let model = DensityModel::new(id);
        let worst = (0..40)
            .flat_map(|i| (0..40).map(move |j| (i as f64 * 0.2 - 4.0, j as f64 * 0.2 - 4.0)))
            .map(|(u, v)| feq_residual(&model, u, v))
            .fold(0.0, f64::max);
        println!("{id:?}: max residual on [-4, 4]^2 = {worst:.3e}");
    }
    for r in feq_suite()? {
        println!(
            "{:<40} {:>10.3e} {:?} {:.0e} {}",
            r.property,
            r.max_residual,
            r.comparison,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
