use proptest::prelude::*;

use roulette_lab::energy::{
    cov_sym_abs_diff, dcor, dcov2_vstat, perm_test_dcor, IntroDensity, PairedSample,
};

fn sample_strategy(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max).prop_flat_map(|m| {
        (
            prop::collection::vec(-10.0f64..10.0, m),
            prop::collection::vec(-10.0f64..10.0, m),
        )
    })
}

fn paired(xs: &[f64], ys: &[f64]) -> PairedSample {
    PairedSample::new(xs.to_vec(), ys.to_vec()).unwrap()
}

/// Neumaier-compensated running sum, so the O(m^3) oracle does not drift.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        self.c += if self.s.abs() >= x.abs() {
            (self.s - t) + x
        } else {
            (x - t) + self.s
        };
        self.s = t;
    }

    fn get(&self) -> f64 {
        self.s + self.c
    }
}

/// `(1/m^2) sum a_ij b_ij + abar bbar - (2/m^3) sum_ijk a_ij b_ik`.
fn triple_sum(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len();
    let mf = m as f64;
    let (mut s1, mut sa, mut sb, mut s3) = (
        Sum::default(),
        Sum::default(),
        Sum::default(),
        Sum::default(),
    );
    for i in 0..m {
        for j in 0..m {
            let a = (x[i] - x[j]).abs();
            let b = (y[i] - y[j]).abs();
            s1.add(a * b);
            sa.add(a);
            sb.add(b);
            for k in 0..m {
                s3.add(a * (y[i] - y[k]).abs());
            }
        }
    }
    s1.get() / (mf * mf) + sa.get() * sb.get() / mf.powi(4) - 2.0 * s3.get() / mf.powi(3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dcov_matches_triple_sum((xs, ys) in sample_strategy(50)) {
        let got = dcov2_vstat(&paired(&xs, &ys)).unwrap();
        let want = triple_sum(&xs, &ys);
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{} vs {}", got, want);
        prop_assert!(got >= -1e-12);
    }

    #[test]
    fn dcov_symmetry_translation_and_scale(
        (xs, ys) in sample_strategy(40),
        a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        b in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        sx in -100.0f64..100.0,
        sy in -100.0f64..100.0,
    ) {
        let base = dcov2_vstat(&paired(&xs, &ys)).unwrap();
        let tol = 1e-10 * base.abs().max(1.0);
        prop_assert!((dcov2_vstat(&paired(&ys, &xs)).unwrap() - base).abs() <= tol);
        let shifted: (Vec<f64>, Vec<f64>) = (xs.iter().map(|x| x + sx).collect(), ys.iter().map(|y| y + sy).collect());
        prop_assert!((dcov2_vstat(&paired(&shifted.0, &shifted.1)).unwrap() - base).abs() <= tol * 10.0);
        let scaled: (Vec<f64>, Vec<f64>) = (xs.iter().map(|x| a * x).collect(), ys.iter().map(|y| b * y).collect());
        let want = (a * b).abs() * base;
        prop_assert!((dcov2_vstat(&paired(&scaled.0, &scaled.1)).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn dcor_is_affine_invariant(
        (xs, ys) in sample_strategy(40),
        a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        b in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0],
        sx in -100.0f64..100.0,
        sy in -100.0f64..100.0,
    ) {
        let s = paired(&xs, &ys);
        prop_assume!(dcor(&s).is_ok());
        let base = dcor(&s).unwrap().value;
        let t = paired(
            &xs.iter().map(|x| a * x + sx).collect::<Vec<_>>(),
            &ys.iter().map(|y| b * y + sy).collect::<Vec<_>>(),
        );
        let moved = dcor(&t).unwrap().value;
        prop_assert!((moved - base).abs() <= 1e-10, "{} vs {}", moved, base);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn perm_test_p_value_is_in_range((xs, ys) in sample_strategy(30), seed in any::<u64>()) {
        let s = paired(&xs, &ys);
        let t = perm_test_dcor(&s, 99, seed).unwrap();
        prop_assert!(t.p_value >= 0.01 && t.p_value <= 1.0);
        prop_assert_eq!(t, perm_test_dcor(&s, 99, seed).unwrap());
    }

    #[test]
    fn cov_is_symmetric_and_translation_invariant((xs, ys) in sample_strategy(40), sx in -10.0f64..10.0) {
        let c = cov_sym_abs_diff(&paired(&xs, &ys)).unwrap();
        prop_assert!((cov_sym_abs_diff(&paired(&ys, &xs)).unwrap() - c).abs() <= 1e-10);
        let moved: Vec<f64> = xs.iter().map(|x| x + sx).collect();
        prop_assert!((cov_sym_abs_diff(&paired(&moved, &ys)).unwrap() - c).abs() <= 1e-9);
    }
}

#[test]
fn intro_density_is_a_probability_density() {
    let d = IntroDensity::default();
    // q jumps only at -1, 0, c, 1, so the midpoint rule on cells aligned with
    // those points integrates the density exactly up to rounding
    let edges = [-1.0, 0.0, d.c, 1.0];
    let mut total = 0.0;
    let mut min = f64::INFINITY;
    for wx in edges.windows(2) {
        for wy in edges.windows(2) {
            let k = 200;
            let (hx, hy) = ((wx[1] - wx[0]) / k as f64, (wy[1] - wy[0]) / k as f64);
            for i in 0..k {
                for j in 0..k {
                    let p = d.density(wx[0] + (i as f64 + 0.5) * hx, wy[0] + (j as f64 + 0.5) * hy);
                    total += p * hx * hy;
                    min = min.min(p);
                }
            }
        }
    }
    assert!((total - 1.0).abs() < 1e-10, "{total}");
    assert!(min >= 0.0);
    for i in 0..=2000 {
        for j in 0..=200 {
            assert!(d.density(-1.0 + i as f64 * 1e-3, -1.0 + j as f64 * 1e-2) >= 0.0);
        }
    }
    assert!((d.acceptance_rate() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn intro_sample_has_uniform_marginals() {
    let s = IntroDensity::default().sample(20_000, 5).unwrap();
    for v in [s.xs(), s.ys()] {
        let m = v.len() as f64;
        let mean = v.iter().sum::<f64>() / m;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
        // uniform on [-1, 1]: mean 0, variance 1/3
        assert!(mean.abs() < 4.0 * (1.0f64 / 3.0 / m).sqrt(), "{mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.01, "{var}");
        assert!(v.iter().all(|x| x.abs() <= 1.0));
    }
}

#[test]
fn independent_columns_are_not_flagged() {
    // x and y drawn from unrelated streams
    let a = IntroDensity::default().sample(400, 1).unwrap();
    let b = IntroDensity::default().sample(400, 2).unwrap();
    let s = PairedSample::new(a.xs().to_vec(), b.ys().to_vec()).unwrap();
    assert!(perm_test_dcor(&s, 199, 3).unwrap().p_value > 0.01);
}
