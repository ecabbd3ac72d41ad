//! A dependent pair with zero covariance of `|X - X'|`-type statistics that
//! distance covariance still detects.

use roulette_lab::energy::{
    cov_sym_abs_diff, dcor, dcov2_vstat, perm_test_dcor, IntroDensity, PairedSample,
};

fn main() -> roulette_lab::Result<()> {
    let density = IntroDensity::default();
    let s = density.sample(2_000, 11)?;
    println!("c = {:.6}", density.c);
    println!(
        "cov of the symmetrized absolute differences: {:+.5}",
        cov_sym_abs_diff(&s)?
    );
    println!(
        "dCov^2 = {:.6}, dCor = {:.4}",
        dcov2_vstat(&s)?,
        dcor(&s)?.value
    );
    let t = perm_test_dcor(&s, 199, 12)?;
    println!(
        "permutation test: p = {:.3} with B = {}",
        t.p_value, t.permutations
    );

    // pair x with the y of an unrelated draw for comparison
    let other = density.sample(2_000, 13)?;
    let indep = PairedSample::new(s.xs().to_vec(), other.ys().to_vec())?;
    let t = perm_test_dcor(&indep, 199, 12)?;
    println!("independent columns: p = {:.3}", t.p_value);
    Ok(())
}
