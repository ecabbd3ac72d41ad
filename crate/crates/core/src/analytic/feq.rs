use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    /// `e^-u` on `(0, inf)`.
    Exponential,
    /// `N(0, 1/2)`.
    NormalHalfVar,
    /// `e^-|x| / 2`.
    Laplace,
    /// `|Z|` with `Z ~ N(0, 1/2)`.
    HalfNormal,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [
        ModelId::Exponential,
        ModelId::NormalHalfVar,
        ModelId::Laplace,
        ModelId::HalfNormal,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "exponential" => ModelId::Exponential,
            "normal_half_var" => ModelId::NormalHalfVar,
            "laplace" => ModelId::Laplace,
            "half_normal" => ModelId::HalfNormal,
            other => return Err(invalid(format!("unknown model {other:?}"))),
        })
    }
}

/// Even shift `g(v)` paired with a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    Zero,
    NegAbs,
}

impl Shift {
    pub fn eval(self, v: f64) -> f64 {
        match self {
            Shift::Zero => 0.0,
            Shift::NegAbs => -v.abs(),
        }
    }
}

/// A density `f` of `X` (and of the independent copy `Y`), the constant `A`,
/// the shift `g` and the density `h` of `V = X - Y` entering
/// `f((u+v)/2) f((u-v)/2) = 2A f(Au + g(v)) h(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    pub id: ModelId,
    pub a: f64,
    pub shift: Shift,
}

impl DensityModel {
    /// The model with its canonical `A` and `g`: `(1, -|v|)` for the
    /// exponential and Laplace laws, `(1/sqrt 2, 0)` for the two normal ones.
    pub fn new(id: ModelId) -> Self {
        let (a, shift) = match id {
            ModelId::Exponential | ModelId::Laplace => (1.0, Shift::NegAbs),
            ModelId::NormalHalfVar | ModelId::HalfNormal => (FRAC_1_SQRT_2, Shift::Zero),
        };
        DensityModel { id, a, shift }
    }

    pub fn with_shift(self, shift: Shift) -> Self {
        DensityModel { shift, ..self }
    }

    pub fn f(&self, x: f64) -> f64 {
        match self.id {
            ModelId::Exponential => {
                if x > 0.0 {
                    (-x).exp()
                } else {
                    0.0
                }
            }
            ModelId::NormalHalfVar => (-x * x).exp() / PI.sqrt(),
            ModelId::Laplace => 0.5 * (-x.abs()).exp(),
            ModelId::HalfNormal => {
                if x > 0.0 {
                    2.0 * (-x * x).exp() / PI.sqrt()
                } else {
                    0.0
                }
            }
        }
    }

    /// Density of `X - Y`.
    pub fn h(&self, v: f64) -> f64 {
        let av = v.abs();
        match self.id {
            ModelId::Exponential => 0.5 * (-av).exp(),
            ModelId::NormalHalfVar => (-v * v / 2.0).exp() / (2.0 * PI).sqrt(),
            ModelId::Laplace => 0.25 * (1.0 + av) * (-av).exp(),
            ModelId::HalfNormal => {
                (2.0 / PI).sqrt() * (-v * v / 2.0).exp() * libm::erfc(av / SQRT_2)
            }
        }
    }

    pub fn lhs(&self, u: f64, v: f64) -> f64 {
        self.f((u + v) / 2.0) * self.f((u - v) / 2.0)
    }

    pub fn rhs(&self, u: f64, v: f64) -> f64 {
        2.0 * self.a * self.f(self.a * u + self.shift.eval(v)) * self.h(v)
    }
}

/// `|lhs - rhs|` of the functional equation at `(u, v)`.
pub fn feq_residual(model: &DensityModel, u: f64, v: f64) -> f64 {
    (model.lhs(u, v) - model.rhs(u, v)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstancyProbe {
    pub v: f64,
    pub points: usize,
    pub lhs_spread: f64,
    pub rhs_spread: f64,
}

fn spread(vals: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    hi - lo
}

/// Max-minus-min of both sides over the grid points strictly inside `(-v, v)`.
pub fn feq_constancy_probe(model: &DensityModel, v: f64, u_grid: &[f64]) -> Result<ConstancyProbe> {
    if !(v > 0.0) {
        return Err(invalid(format!("constancy probe needs v > 0, got {v}")));
    }
    let inside: Vec<f64> = u_grid.iter().copied().filter(|u| u.abs() < v).collect();
    if inside.is_empty() {
        return Err(invalid("no grid point lies inside (-v, v)"));
    }
    Ok(ConstancyProbe {
        v,
        points: inside.len(),
        lhs_spread: spread(inside.iter().map(|&u| model.lhs(u, v))),
        rhs_spread: spread(inside.iter().map(|&u| model.rhs(u, v))),
    })
}

/// Both sides for the half-normal law with `A = 1/sqrt 2`, `g = 0`, on
/// `0 < u < |v|`, where the left side vanishes and the right side does not.
pub fn half_normal_violation(u: f64, v: f64) -> Result<(f64, f64)> {
    if !(u > 0.0 && u < v.abs()) {
        return Err(invalid(format!("need 0 < u < |v|, got u = {u}, v = {v}")));
    }
    let m = DensityModel::new(ModelId::HalfNormal);
    Ok((m.lhs(u, v), m.rhs(u, v)))
}

/// Spread of `D(u) = (u+v)^alpha + (u-v)^alpha - (2Au + 2g)^alpha` over `u_grid`.
///
/// Zero spread means `D` does not depend on `u` at grid resolution.
pub fn alpha_probe(alpha: f64, a: f64, g: f64, v: f64, u_grid: &[f64]) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if u_grid.is_empty() || u_grid.iter().any(|&u| !(u > v)) {
        return Err(invalid(
            "alpha probe needs a non-empty grid inside (v, inf)",
        ));
    }
    let mut vals = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let base = 2.0 * a * u + 2.0 * g;
        if !(base >= 0.0) || u - v < 0.0 {
            return Err(invalid(format!("negative base at u = {u}")));
        }
        vals.push((u + v).powf(alpha) + (u - v).powf(alpha) - base.powf(alpha));
    }
    Ok(spread(vals.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_point() {
        let m = DensityModel::new(ModelId::Exponential);
        assert!((m.lhs(3.0, 1.0) - (-3.0f64).exp()).abs() < 1e-16);
        assert!(feq_residual(&m, 3.0, 1.0) < 1e-16);
    }

    #[test]
    fn laplace_candidate_fails() {
        let m = DensityModel::new(ModelId::Laplace);
        let want = ((-2.0f64).exp() / 4.0 - 0.75 * (-4.0f64).exp()).abs();
        assert!((feq_residual(&m, 0.0, 2.0) - want).abs() < 1e-15);
        assert!(want > 0.02);
    }

    #[test]
    fn densities_integrate_to_one() {
        // Simpson on a wide interval; every density here decays at least like e^-|x|
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            let k = 200_000;
            let h = (b - a) / k as f64;
            let mut s = f(a) + f(b);
            for i in 1..k {
                s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0
        };
        for id in ModelId::ALL {
            let m = DensityModel::new(id);
            let (lo, hi) = match id {
                ModelId::Exponential | ModelId::HalfNormal => (f64::MIN_POSITIVE, 60.0),
                _ => (-60.0, 60.0),
            };
            assert!((simpson(&|x| m.f(x), lo, hi) - 1.0).abs() < 1e-10, "{id:?}");
            assert!(
                (simpson(&|v| m.h(v), -60.0, 60.0) - 1.0).abs() < 1e-8,
                "{id:?}"
            );
            assert_eq!(m.h(1.3), m.h(-1.3));
        }
    }

    #[test]
    fn half_normal_support_mismatch() {
        for (u, v) in [(0.5, 1.0), (0.1, 0.5)] {
            let (l, r) = half_normal_violation(u, v).unwrap();
            assert_eq!(l, 0.0);
            assert!(r > 0.0);
        }
        assert!(half_normal_violation(2.0, 1.0).is_err());
    }

    #[test]
    fn alpha_cases() {
        let grid: Vec<f64> = (0..200).map(|i| 1.5 + i as f64 * 0.5).collect();
        assert!(alpha_probe(2.0, FRAC_1_SQRT_2, 0.0, 1.0, &grid).unwrap() < 1e-10);
        assert!(alpha_probe(1.0, 1.0, -1.0, 1.0, &grid).unwrap() < 1e-10);
        let a3 = 2f64.powf(-2.0 / 3.0);
        let g3: Vec<f64> = (0..=980).map(|i| 2.0 + i as f64 * 0.1).collect();
        assert!(alpha_probe(3.0, a3, 0.0, 1.0, &g3).unwrap() > 1.0);
        assert!(alpha_probe(2.0, 1.0, 0.0, 1.0, &[0.5]).is_err());
    }
}
