//! Acceptance criteria. Each test prints one `PASS` or `FAIL` line and then
//! asserts. Run with `cargo test --test acceptance -- --test-threads=1` for an
//! ordered report.

use std::io::Write;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roulette_lab::analytic::{
    cauchy_cf_identity, cf_modulus_identity, feq_residual, half_normal_violation,
    inverse_fourier_nonneg, linspace, polya_check, CauchyQuadrature, DensityModel, ModelId,
    Quadrature, NONNEG_FLOOR,
};
use roulette_lab::energy::{
    cov_sym_abs_diff_bootstrap, dcor, dcov2_vstat, perm_test_dcor, IntroDensity, PairedSample,
};
use roulette_lab::exact::{
    brute_force_pmf, exact_moments, limit_variance, mean_fraction_f64, p_recurrence, survivor_pmf,
    CertifiedConfig, Limits, RecurrenceMode,
};
use roulette_lab::merging::{build_series, detect_waves, log_grid, DEFAULT_SMOOTHING};
use roulette_lab::rng::DEFAULT_SEED;
use roulette_lab::series::rational_to_f64;
use roulette_lab::sim::{clt_check, coupling_check, estimate_p, mcdiarmid_check, CentrePolicy};

/// Writes past the test harness capture so the line shows up for passing tests too.
fn report(id: &str, pass: bool, detail: &str) {
    let line = format!(
        "{} criterion {id}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn q(a: i64, b: i64) -> BigRational {
    BigRational::new(a.into(), b.into())
}

#[test]
fn criterion_01_oracle_equivalence() {
    let limits = Limits::default();
    let mut bad = Vec::new();
    for n in 2..=8 {
        let fast = survivor_pmf(n, &limits).unwrap();
        let slow = brute_force_pmf(n).unwrap();
        let same = fast.weights().len() == slow.weights().len()
            && (0..fast.weights().len() as u64).all(|k| fast.probability(k) == slow.probability(k));
        if !same {
            bad.push(n);
        }
    }
    report(
        "1",
        bad.is_empty(),
        &format!("survivor_pmf == brute_force_pmf exactly for n = 2..8, mismatches {bad:?}"),
    );
}

#[test]
fn criterion_02_recurrence_values() {
    let r = p_recurrence(5, RecurrenceMode::Exact, &Limits::default()).unwrap();
    let want = [q(0, 1), q(1, 1), q(0, 1), q(3, 4), q(16, 27), q(15, 32)];
    let got: Vec<BigRational> = r
        .series
        .entries()
        .iter()
        .map(|e| match &e.value {
            roulette_lab::PValue::Exact(v) => v.clone(),
            other => panic!("non-exact entry {other:?}"),
        })
        .collect();
    report(
        "2",
        got == want,
        &format!(
            "p_0..p_5 = {}",
            got.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
}

/// `n Var(xi_n / n)` in floating point from the closed form, using `ln_1p`
/// for the powers.
fn n_var_f64(n: u64) -> f64 {
    let nf = n as f64;
    let m = nf - 1.0;
    let mean = mean_fraction_f64(n);
    let pair = (2.0 * (-1.0 / m).ln_1p() + (nf - 2.0) * (-2.0 / m).ln_1p()).exp();
    mean + m * pair - nf * mean * mean
}

#[test]
fn criterion_03_moment_identities() {
    let limits = Limits::default();
    let mut bad = Vec::new();
    for n in 3..=200u64 {
        let pmf = survivor_pmf(n, &limits).unwrap();
        let (mean, var) = exact_moments(n).unwrap();
        let nn = BigRational::from_integer(n.into());
        if pmf.mean() != &mean * &nn || pmf.variance() != &var * &nn * &nn {
            bad.push(n);
        }
    }
    // float closed form agrees with the exact one where both are cheap
    let mut float_err = 0.0f64;
    for n in [100u64, 200, 400] {
        let (_, var) = exact_moments(n).unwrap();
        float_err = float_err.max((n_var_f64(n) - rational_to_f64(&var) * n as f64).abs());
    }
    // least-squares C in dev = C/n over 10^2..10^4; a 1/n law keeps n |dev| within 10% of it
    let ns: Vec<u64> = (0..=40)
        .map(|i| (100.0 * 10f64.powf(i as f64 / 20.0)).round() as u64)
        .collect();
    let dev = |n: u64| n_var_f64(n) - limit_variance();
    let (sxy, sxx) = ns.iter().fold((0.0, 0.0), |(a, b), &n| {
        let x = 1.0 / n as f64;
        (a + x * dev(n), b + x * x)
    });
    let c = sxy / sxx;
    let worst = ns
        .iter()
        .map(|&n| n as f64 * dev(n).abs() / c.abs())
        .fold(0.0, f64::max);
    let pass = bad.is_empty() && float_err < 1e-12 && worst <= 1.1;
    report(
        "3",
        pass,
        &format!(
            "pmf mean/variance exact for n = 3..200 (mismatches {bad:?}); float vs exact {float_err:.1e}; \
             |n Var - (1/e - 2/e^2)| <= C/n with C = {c:.4} fitted on 10^2..10^4, max n|dev|/|C| = {worst:.4}"
        ),
    );
}

#[test]
fn criterion_04_monte_carlo_consistency() {
    let exact = p_recurrence(200, RecurrenceMode::Exact, &Limits::default())
        .unwrap()
        .series;
    let mut parts = Vec::new();
    let mut pass = true;
    for n in [3u64, 5, 10, 50, 100, 200] {
        let truth = exact.get(n).unwrap().value_f64();
        let est = estimate_p(n, 1_000_000, DEFAULT_SEED).unwrap();
        let z = (est.point - truth) / est.stderr;
        pass &= est.within(truth, 4.0);
        parts.push(format!("n={n} z={z:+.2}"));
    }
    report(
        "4",
        pass,
        &format!(
            "estimate_p(n, 10^6) within 4 stderr of exact p_n: {}",
            parts.join(", ")
        ),
    );
}

#[test]
fn criterion_05_clt() {
    let r = clt_check(10_000, 10_000, DEFAULT_SEED, CentrePolicy::FiniteMean).unwrap();
    report(
        "5",
        r.pass(),
        &format!(
            "n = 10^4, 10^4 reps: variance_ratio = {:.4} (need [0.95, 1.05]), standardized mean = {:+.4} (need |.| <= {:.4})",
            r.variance_ratio, r.standardized_mean, r.mean_tolerance
        ),
    );
}

#[test]
fn criterion_06_coupling() {
    let r = coupling_check(100, 100_000, DEFAULT_SEED).unwrap();
    let z = (r.eta.point - 1.0) / r.eta.stderr;
    report(
        "6",
        r.violations == 0 && z.abs() <= 4.0,
        &format!(
            "{} coupled rounds at n = 100: {} violations of |xi - xi'| <= eta; E(eta) = {:.4} +- {:.4} (z = {z:+.2})",
            r.rounds, r.violations, r.eta.point, r.eta.stderr
        ),
    );
}

#[test]
fn criterion_07_mcdiarmid() {
    let mut parts = Vec::new();
    let mut pass = true;
    for (n, step) in [(100u64, 1.0), (1000, 2.0)] {
        let eps: Vec<f64> = (0..=50).map(|i| i as f64 * step).collect();
        let t = mcdiarmid_check(n, 100_000, &eps, DEFAULT_SEED).unwrap();
        let flagged: Vec<f64> = t
            .rows
            .iter()
            .filter(|r| r.flagged)
            .map(|r| r.epsilon)
            .collect();
        pass &= flagged.is_empty();
        parts.push(format!(
            "n={n}: {} epsilons, flagged {flagged:?}",
            eps.len()
        ));
    }
    report(
        "7",
        pass,
        &format!(
            "empirical tails vs 2exp(-2 eps^2/n) + 4 stderr, 10^5 reps; {}",
            parts.join("; ")
        ),
    );
}

#[test]
fn criterion_08_log_periodic_waves() {
    let start = Instant::now();
    let grid = log_grid(700, 100_000, std::f64::consts::PI).unwrap();
    let series = build_series(
        600,
        &grid,
        100_000,
        DEFAULT_SEED,
        RecurrenceMode::Certified(CertifiedConfig::default()),
        &Limits::default(),
    )
    .unwrap();
    let m = detect_waves(&series, DEFAULT_SMOOTHING).unwrap();
    let in_band = !m.period_estimates.is_empty()
        && m.period_estimates.iter().all(|p| (0.8..=1.2).contains(p));
    let errs_ok = m
        .extrema
        .iter()
        .all(|e| e.log_n_err.is_finite() && e.amplitude_err.is_finite());
    let pass = m.extrema.len() >= 3 && in_band && errs_ok;
    let periods: Vec<String> = m
        .period_estimates
        .iter()
        .map(|p| format!("{p:.3}"))
        .collect();
    report(
        "8",
        pass,
        &format!(
            "certified p_n to 600 + Monte Carlo (10^5 reps) on {} log-grid points to 10^5: {} extrema, peak spacings [{}], c = {:.4}, kappa' = {}, {:.0} s",
            grid.len(),
            m.extrema.len(),
            periods.join(", "),
            m.c,
            m.kappa_prime.map_or("n/a".into(), |k| format!("{k:.3}")),
            start.elapsed().as_secs_f64()
        ),
    );
}

/// `(1/m^2) sum a_ij b_ij + abar bbar - (2/m^3) sum_ijk a_ij b_ik`.
fn triple_sum(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len();
    let mf = m as f64;
    let a = |i: usize, j: usize| (x[i] - x[j]).abs();
    let b = |i: usize, j: usize| (y[i] - y[j]).abs();
    let (mut s1, mut sa, mut sb, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            s1 += a(i, j) * b(i, j);
            sa += a(i, j);
            sb += b(i, j);
            for k in 0..m {
                s3 += a(i, j) * b(i, k);
            }
        }
    }
    s1 / (mf * mf) + sa * sb / (mf * mf * mf * mf) - 2.0 * s3 / (mf * mf * mf)
}

/// Population covariance of `|X - X'|` and `|Y - Y'|` under the intro density,
/// by midpoint rule on cells aligned with the jumps of `q`, Richardson-extrapolated.
fn intro_cov_quadrature(d: &IntroDensity) -> f64 {
    let at = |cells: usize| {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for (a, b) in [(-1.0, 0.0), (0.0, d.c), (d.c, 1.0)] {
            let k = ((cells as f64 * (b - a) / 2.0).round() as usize).max(1);
            let h = (b - a) / k as f64;
            for i in 0..k {
                xs.push(a + h * (i as f64 + 0.5));
                ws.push(h);
            }
        }
        let n = xs.len();
        let p: Vec<f64> = (0..n * n)
            .map(|t| d.density(xs[t / n], xs[t % n]) * ws[t / n] * ws[t % n])
            .collect();
        let dist = |i: usize, j: usize| (xs[i] - xs[j]).abs();
        // E|X-X'||Y-Y'| = sum_ik D_ik (P D P^T)_ik
        let mut pd = vec![0.0; n * n];
        for i in 0..n {
            for l in 0..n {
                let s: f64 = (0..n).map(|j| p[i * n + j] * dist(j, l)).sum();
                pd[i * n + l] = s;
            }
        }
        let mut e = 0.0;
        for i in 0..n {
            for k in 0..n {
                let s: f64 = (0..n).map(|l| pd[i * n + l] * p[k * n + l]).sum();
                e += dist(i, k) * s;
            }
        }
        let px: Vec<f64> = (0..n).map(|i| (0..n).map(|j| p[i * n + j]).sum()).collect();
        let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| p[i * n + j]).sum()).collect();
        let mx: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| dist(i, k) * px[i] * px[k])
            .sum();
        let my: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |k| (i, k)))
            .map(|(i, k)| dist(i, k) * py[i] * py[k])
            .sum();
        e - mx * my
    };
    let (coarse, fine) = (at(200), at(400));
    (4.0 * fine - coarse) / 3.0
}

#[test]
fn criterion_09_energy_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(2..=50);
        let xs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = PairedSample::new(xs.clone(), ys.clone()).unwrap();
        worst = worst.max((dcov2_vstat(&s).unwrap() - triple_sum(&xs, &ys)).abs());
    }
    let mut affine = 0.0f64;
    for (a, b) in [(2.0, 1.0), (-0.5, 3.0), (1e3, -7.0)] {
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        affine = affine.max((dcor(&PairedSample::new(xs, ys).unwrap()).unwrap().value - 1.0).abs());
    }

    let density = IntroDensity::default();
    let sample = density.sample(10_000, DEFAULT_SEED).unwrap();
    let cov = cov_sym_abs_diff_bootstrap(&sample, 200, DEFAULT_SEED).unwrap();
    let perm = perm_test_dcor(&sample, 199, DEFAULT_SEED).unwrap();
    let population = intro_cov_quadrature(&density);

    let pass = worst <= 1e-12
        && affine <= 1e-10
        && cov.value.abs() <= 4.0 * cov.stderr
        && perm.p_value < 0.01
        && population.abs() <= 1e-8;
    report(
        "9",
        pass,
        &format!(
            "dCov^2 vs triple sum max diff {worst:.1e}; |dcor(x, ax+b) - 1| <= {affine:.1e}; \
             intro m = 10^4: cov = {:+.2e}, 4 stderr = {:.2e}, perm p = {:.4} (B = 199); quadrature population cov = {population:+.1e}",
            cov.value,
            4.0 * cov.stderr,
            perm.p_value
        ),
    );
}

#[test]
fn criterion_10_analytic_verification() {
    let start = Instant::now();
    let grid = linspace(-5.0, 5.0, 100);
    let resid = |id| {
        let m = DensityModel::new(id);
        grid.iter()
            .flat_map(|&u| grid.iter().map(move |&v| (u, v)))
            .map(|(u, v)| feq_residual(&m, u, v))
            .fold(0.0, f64::max)
    };
    let (r_exp, r_norm) = (resid(ModelId::Exponential), resid(ModelId::NormalHalfVar));
    let laplace = feq_residual(&DensityModel::new(ModelId::Laplace), 0.0, 2.0);
    let (hn_l, hn_r) = half_normal_violation(0.5, 1.0).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cf = (0..10_000)
        .map(|_| cf_modulus_identity(rng.random_range(-5.0..5.0), rng.random_range(-50.0..50.0)))
        .fold(0.0, f64::max);

    let xs = linspace(-20.0, 20.0, 4000);
    let mut min_g = f64::INFINITY;
    for y in [-1.0, 0.1, 1.0, 10.0] {
        min_g = min_g.min(
            inverse_fourier_nonneg(y, &xs, Quadrature::default())
                .unwrap()
                .min_value,
        );
    }
    let cauchy = [0.0, 1.0, -1.0, 2.0, -2.0]
        .iter()
        .map(|&w| {
            cauchy_cf_identity(w, CauchyQuadrature::default())
                .unwrap()
                .error
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();

    let pass = r_exp < 1e-10
        && r_norm < 1e-10
        && laplace > 1e-2
        && hn_l == 0.0
        && hn_r > 0.0
        && cf < 1e-14
        && min_g >= NONNEG_FLOOR
        && cauchy <= 1e-6
        && secs < 300.0;
    report(
        "10 (all but the Polya check)",
        pass,
        &format!(
            "residual exp {r_exp:.1e}, normal {r_norm:.1e}; Laplace at (0,2) {laplace:.4}; half-normal at (0.5,1) lhs {hn_l}, rhs {hn_r:.4}; \
             cf modulus {cf:.1e}; min g on [-20,20] {min_g:+.2e}; Cauchy error {cauchy:.1e}; {secs:.1} s"
        ),
    );
}

#[test]
fn criterion_10_polya_check() {
    let t = linspace(0.0, 20.0, 20_000);
    let mut failures = Vec::new();
    for y in [0.1, 1.0, 10.0] {
        let r = polya_check(y, &t).unwrap();
        for c in r.failures() {
            failures.push(format!(
                "y={y}: {} (worst {:.3e} at t = {})",
                c.property, c.worst, c.at
            ));
        }
    }
    report(
        "10 (polya_check, y in {0.1, 1, 10}, t in [0, 20] step 1e-3)",
        failures.is_empty(),
        &if failures.is_empty() {
            "all properties hold".to_string()
        } else {
            failures.join("; ")
        },
    );
}
