//! The characteristic-function counterexample: `ghat(y, .)`, its Polya
//! conditions and the inverse transform.

use roulette_lab::analytic::{
    cauchy_cf_identity, ghat, inverse_fourier_nonneg, linspace, polya_check, CauchyQuadrature,
    Quadrature,
};

fn main() -> roulette_lab::Result<()> {
    for y in [-1.0, 0.1, 1.0, 10.0] {
        println!("y = {y}: ghat(y, 1) = {:.5}", ghat(y, 1.0));
        // nonpositive levels give the Cauchy-times-Gaussian product directly
        let checks = if y > 0.0 {
            polya_check(y, &linspace(0.0, 20.0, 4_000))?.checks
        } else {
            Vec::new()
        };
        for c in &checks {
            println!(
                "  {:<22} worst {:+.4e} at t = {:.3} {}",
                c.property,
                c.worst,
                c.at,
                if c.pass { "" } else { "FAIL" }
            );
        }
        let inv = inverse_fourier_nonneg(y, &linspace(-4.0, 4.0, 8), Quadrature::default())?;
        let g: Vec<String> = inv.g.values.iter().map(|v| format!("{v:.4}")).collect();
        println!("  g on -4..4: {}", g.join(" "));
    }
    let c = cauchy_cf_identity(2.0, CauchyQuadrature::default())?;
    println!(
        "Cauchy check at w = 2: {:.8} vs e^-2 = {:.8}",
        c.integral,
        (-2f64).exp()
    );
    Ok(())
}
