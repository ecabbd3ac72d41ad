use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::series::format_f64;

/// `e^{-2|t| - t^2 + i t^2 s} / (1 + s^2)`.
pub fn joint_cf(t: f64, s: f64) -> Complex64 {
    Complex64::from_polar((-2.0 * t.abs() - t * t).exp(), t * t * s) / (1.0 + s * s)
}

/// `| |f(t,s)| - |f(t,0)| |f(0,s)| |` for the joint characteristic function above.
pub fn cf_modulus_identity(t: f64, s: f64) -> f64 {
    (joint_cf(t, s).norm() - joint_cf(t, 0.0).norm() * joint_cf(0.0, s).norm()).abs()
}

/// `exp(-2|t| - t^2 - |t^2 - y| + |y|)`, the characteristic function in `x`
/// of the conditional part of the counterexample at level `y`.
pub fn ghat(y: f64, t: f64) -> f64 {
    (-2.0 * t.abs() - t * t - (t * t - y).abs() + y.abs()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub property: String,
    pub pass: bool,
    /// Most adverse value seen (difference, slope change or tail value).
    pub worst: f64,
    /// Grid point where `worst` occurs.
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyaReport {
    pub y: f64,
    pub points: usize,
    pub tolerance: f64,
    pub checks: Vec<PropertyCheck>,
}

impl PolyaReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &PropertyCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

const POLYA_TOL: f64 = 1e-9;
const TAIL_LIMIT: f64 = 1e-8;

/// Grid check of the Polya conditions for `ghat(y, .)`: value 1 at the
/// origin, evenness, non-increase, convexity on `t >= 0` and a vanishing tail.
///
/// Convexity is tested on slopes between neighbouring grid points, so a
/// concave corner anywhere in the grid shows up as a negative slope change.
pub fn polya_check(y: f64, t_grid: &[f64]) -> Result<PolyaReport> {
    if !(y > 0.0) {
        return Err(invalid(format!("polya check needs y > 0, got {y}")));
    }
    if t_grid.len() < 3 || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(
            "t grid must start at 0, be strictly increasing and have 3+ points",
        ));
    }
    let g: Vec<f64> = t_grid.iter().map(|&t| ghat(y, t)).collect();
    let mut checks = Vec::new();

    checks.push(PropertyCheck {
        property: "unit_at_origin".into(),
        pass: g[0] == 1.0,
        worst: (g[0] - 1.0).abs(),
        at: 0.0,
    });

    let (mut worst, mut at) = (0.0f64, 0.0);
    for &t in t_grid {
        let d = (ghat(y, -t) - ghat(y, t)).abs();
        if d > worst {
            (worst, at) = (d, t);
        }
    }
    checks.push(PropertyCheck {
        property: "even".into(),
        pass: worst == 0.0,
        worst,
        at,
    });

    let (mut worst, mut at) = (f64::NEG_INFINITY, 0.0);
    for i in 0..g.len() - 1 {
        let d = g[i + 1] - g[i];
        if d > worst {
            (worst, at) = (d, t_grid[i]);
        }
    }
    checks.push(PropertyCheck {
        property: "nonincreasing".into(),
        pass: worst <= POLYA_TOL,
        worst,
        at,
    });

    let slope = |i: usize| (g[i + 1] - g[i]) / (t_grid[i + 1] - t_grid[i]);
    let (mut worst, mut at) = (f64::INFINITY, 0.0);
    for i in 0..g.len() - 2 {
        let d = slope(i + 1) - slope(i);
        if d < worst {
            (worst, at) = (d, t_grid[i + 1]);
        }
    }
    checks.push(PropertyCheck {
        property: "convex".into(),
        pass: worst >= -POLYA_TOL,
        worst,
        at,
    });

    let last = *g.last().expect("grid has 3+ points");
    checks.push(PropertyCheck {
        property: "vanishes_at_infinity".into(),
        pass: last <= TAIL_LIMIT,
        worst: last,
        at: *t_grid.last().unwrap(),
    });

    Ok(PolyaReport {
        y,
        points: t_grid.len(),
        tolerance: POLYA_TOL,
        checks,
    })
}

/// Quadrature budget for the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Truncation point `T`; `None` means `8 + sqrt|y|`.
    pub t_max: Option<f64>,
    /// Largest node spacing.
    pub step: f64,
    /// Largest acceptable certified error.
    pub tolerance: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            t_max: None,
            step: 1e-3,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub t_max: f64,
    pub step: f64,
    /// Certified bound on |computed - exact| at every grid point.
    pub error_bound: f64,
    pub tolerance: f64,
}

/// A real function sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: GridMeta,
}

impl GridFunction {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            w.write_record([format_f64(*x), format_f64(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `g(x) = (1/2pi) int ghat(y,t) e^{-itx} dt` on a grid, and `f(x,y) = e^{-|y|} g(x) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InverseFourier {
    pub y: f64,
    pub g: GridFunction,
    pub joint: Vec<f64>,
    pub min_value: f64,
    /// `min_value >= -1e-8`.
    pub nonnegative: bool,
}

/// Nonnegativity threshold for the inverse transform.
pub const NONNEG_FLOOR: f64 = -1e-8;

/// One analytic piece of `ghat` on `[lo, hi]`: `e^{-2t}`, or
/// `e^{-2t - 2t^2 + k}` when `quadratic`.
#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    quadratic: bool,
    k: f64,
    nodes: usize,
}

impl Panel {
    fn ghat(&self, t: f64) -> f64 {
        if self.quadratic {
            (-2.0 * t - 2.0 * t * t + self.k).exp()
        } else {
            (-2.0 * t).exp()
        }
    }

    fn dlog(&self, t: f64) -> f64 {
        if self.quadratic {
            -2.0 - 4.0 * t
        } else {
            -2.0
        }
    }

    /// Cauchy bound on `max |d^4/dt^4 ghat(t) cos(tx)|` over the panel for
    /// `|x| <= x_max`, from discs of radius `r` around each point.
    fn fourth_derivative_bound(&self, x_max: f64) -> f64 {
        [0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0]
            .iter()
            .map(|&r| {
                let mut log_m = x_max * r - 2.0 * (self.lo - r);
                if self.quadratic {
                    let a = (self.lo - r).max(0.0);
                    log_m += -2.0 * (a * a - r * r) + self.k;
                }
                24.0 * log_m.exp() / r.powi(4)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn panels(y: f64, t_max: f64, step: f64) -> Vec<Panel> {
    let k = y + y.abs();
    let kink = if y > 0.0 { y.sqrt().min(t_max) } else { 0.0 };
    let mut out = Vec::new();
    for (lo, hi, quadratic) in [(0.0, kink, false), (kink, t_max, true)] {
        if hi <= lo {
            continue;
        }
        let parts = ((hi - lo) / 0.5).ceil() as usize;
        for p in 0..parts {
            let a = lo + (hi - lo) * p as f64 / parts as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / parts as f64;
            out.push(Panel {
                lo: a,
                hi: b,
                quadratic,
                k,
                nodes: ((b - a) / step).ceil() as usize,
            });
        }
    }
    out
}

/// Certified inverse Fourier transform of `ghat(y, .)` on `x_grid`.
///
/// `ghat` is even, so `g(x) = (1/pi) int_0^T ghat(t) cos(tx) dt` plus a tail.
/// `[0, T]` is cut at `sqrt y` and into panels of width at most 1/2, each
/// integrated by the trapezoid rule with endpoint derivative correction,
/// whose error is `(b-a) h^4 / 720 max|f''''|`. The fourth derivative is
/// bounded by Cauchy's estimate and the tail by the `e^{-2t-2t^2}` envelope.
/// An error bound above `quadrature.tolerance` is reported, not ignored.
pub fn inverse_fourier_nonneg(
    y: f64,
    x_grid: &[f64],
    quadrature: Quadrature,
) -> Result<InverseFourier> {
    if x_grid.is_empty() || x_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("x grid must be non-empty and strictly increasing"));
    }
    if !(quadrature.step > 0.0) {
        return Err(invalid("quadrature step must be positive"));
    }
    let t_max = quadrature.t_max.unwrap_or(8.0 + y.abs().sqrt());
    if !(t_max > 0.0) {
        return Err(invalid("truncation point must be positive"));
    }
    let ps = panels(y, t_max, quadrature.step);
    let x_max = x_grid.iter().fold(0.0f64, |a, x| a.max(x.abs()));

    let mut bound = 0.0;
    for p in &ps {
        let h = (p.hi - p.lo) / p.nodes as f64;
        bound += (p.hi - p.lo) * h.powi(4) / 720.0 * p.fourth_derivative_bound(x_max);
    }
    let k = y + y.abs();
    let tail = if y > 0.0 && t_max < y.sqrt() {
        (-2.0 * t_max).exp() / 2.0
    } else {
        (k - 2.0 * t_max - 2.0 * t_max * t_max).exp() / (2.0 + 4.0 * t_max)
    };
    let nodes: usize = ps.iter().map(|p| p.nodes + 1).sum();
    let rounding = 4.0 * f64::EPSILON * nodes as f64 * quadrature.step.max(1.0 / nodes as f64);
    let error_bound = (bound + tail) / PI + rounding;
    if error_bound > quadrature.tolerance {
        return Err(Error::InsufficientQuadrature {
            bound: error_bound,
            tolerance: quadrature.tolerance,
        });
    }

    // nodes and ghat values are shared by every x
    let tables: Vec<(Panel, Vec<f64>, Vec<f64>)> = ps
        .iter()
        .map(|p| {
            let h = (p.hi - p.lo) / p.nodes as f64;
            let ts: Vec<f64> = (0..=p.nodes).map(|i| p.lo + i as f64 * h).collect();
            let gs: Vec<f64> = ts.iter().map(|&t| p.ghat(t)).collect();
            (*p, ts, gs)
        })
        .collect();
    let values: Vec<f64> = x_grid
        .par_iter()
        .map(|&x| {
            let mut total = 0.0;
            for (p, ts, gs) in &tables {
                let h = (p.hi - p.lo) / p.nodes as f64;
                let n = ts.len() - 1;
                let mut s = 0.5 * (gs[0] * (ts[0] * x).cos() + gs[n] * (ts[n] * x).cos());
                for i in 1..n {
                    s += gs[i] * (ts[i] * x).cos();
                }
                let d = |i: usize| {
                    let (t, g) = (ts[i], gs[i]);
                    g * (p.dlog(t) * (t * x).cos() - x * (t * x).sin())
                };
                total += h * s - h * h / 12.0 * (d(n) - d(0));
            }
            total / PI
        })
        .collect();
    let joint: Vec<f64> = values.iter().map(|g| 0.5 * (-y.abs()).exp() * g).collect();
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InverseFourier {
        y,
        g: GridFunction {
            grid: x_grid.to_vec(),
            values,
            meta: GridMeta {
                t_max,
                step: quadrature.step,
                error_bound,
                tolerance: quadrature.tolerance,
            },
        },
        joint,
        min_value,
        nonnegative: min_value >= NONNEG_FLOOR,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyQuadrature {
    pub t_max: f64,
    pub step: f64,
}

impl Default for CauchyQuadrature {
    fn default() -> Self {
        CauchyQuadrature {
            t_max: 200.0,
            step: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyCheck {
    pub w: f64,
    pub integral: f64,
    pub exact: f64,
    pub error: f64,
}

/// `int e^{isw} / (pi (1 + s^2)) ds` against `e^{-|w|}`.
///
/// The integral over `[0, S]` uses the corrected trapezoid rule. The tail
/// beyond `S` is `pi/2 - atan S` for `w = 0` and otherwise the first three
/// terms of repeated integration by parts, which needs `|w| S >= 20`.
pub fn cauchy_cf_identity(w: f64, quadrature: CauchyQuadrature) -> Result<CauchyCheck> {
    let (big_s, step) = (quadrature.t_max, quadrature.step);
    if !(big_s > 0.0 && step > 0.0) {
        return Err(invalid("cauchy quadrature needs positive t_max and step"));
    }
    if w != 0.0 && w.abs() * big_s < 20.0 {
        return Err(invalid(format!(
            "|w| t_max = {} is too small for the tail expansion",
            w.abs() * big_s
        )));
    }
    let phi = |s: f64| 1.0 / (1.0 + s * s);
    let f = |s: f64| (w * s).cos() * phi(s);
    let df = |s: f64| -w * (w * s).sin() * phi(s) - (w * s).cos() * 2.0 * s * phi(s).powi(2);
    let n = (big_s / step).ceil() as usize;
    let h = big_s / n as f64;
    let mut s = 0.5 * (f(0.0) + f(big_s));
    for i in 1..n {
        s += f(i as f64 * h);
    }
    let body = h * s - h * h / 12.0 * (df(big_s) - df(0.0));
    let tail = if w == 0.0 {
        PI / 2.0 - big_s.atan()
    } else {
        let p0 = phi(big_s);
        let p1 = -2.0 * big_s * p0 * p0;
        let p2 = (6.0 * big_s * big_s - 2.0) * p0.powi(3);
        let (sn, cs) = (w * big_s).sin_cos();
        -sn * p0 / w - cs * p1 / (w * w) + sn * p2 / w.powi(3)
    };
    let integral = 2.0 * (body + tail) / PI;
    let exact = (-w.abs()).exp();
    Ok(CauchyCheck {
        w,
        integral,
        exact,
        error: (integral - exact).abs(),
    })
}
