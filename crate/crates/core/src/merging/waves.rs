use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Domain, DEFAULT_SEED};
use crate::series::{format_f64, PSeries};

/// Default ratio of the current period estimate to the smoothing width.
pub const DEFAULT_SMOOTHING: u32 = 8;

const BOOTSTRAP_REPLICAS: u32 = 200;
const TRIM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Peak,
    Trough,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    /// Position `M` in `ln n`.
    pub log_n: f64,
    /// Parametric-bootstrap spread of `log_n`; zero for noise-free input.
    pub log_n_err: f64,
    /// `h = p - c` at the extremum.
    pub amplitude: f64,
    pub amplitude_err: f64,
}

/// Oscillation summary of a p_n series against `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveModel {
    /// Level between peaks and troughs: the log-n average of p over whole periods.
    pub c: f64,
    /// Alternating peaks and troughs in increasing `log_n`, boundary ones excluded.
    pub extrema: Vec<Extremum>,
    /// Successive peak gaps in `ln n`.
    pub period_estimates: Vec<f64>,
    /// Decay constant of the wave heuristic, when at least three extrema of one kind exist.
    pub kappa_prime: Option<f64>,
    /// Width in `ln n` of the moving average applied to the series.
    pub smoothing_width: f64,
    pub bootstrap_replicas: u32,
}

impl WaveModel {
    pub fn peaks(&self) -> impl Iterator<Item = &Extremum> {
        self.extrema.iter().filter(|e| e.kind == ExtremumKind::Peak)
    }

    /// Median of the peak gaps.
    pub fn period(&self) -> f64 {
        median(&self.period_estimates)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    x: f64,
    y: f64,
    e: f64,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    positive: bool,
    start: usize,
    end: usize,
}

fn points(series: &PSeries) -> Vec<Pt> {
    series
        .entries()
        .iter()
        .filter(|e| e.n >= 3)
        .map(|e| Pt {
            x: (e.n as f64).ln(),
            y: e.value_f64(),
            e: e.error(),
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let k = xs.len();
    if k == 1 {
        return vec![1.0];
    }
    (0..k)
        .map(|i| {
            let lo = if i == 0 { xs[0] } else { xs[i - 1] };
            let hi = if i + 1 == k { xs[k - 1] } else { xs[i + 1] };
            0.5 * (hi - lo)
        })
        .collect()
}

/// Weighted mean after dropping `TRIM` of the weight from each tail.
fn trimmed_mean(ys: &[f64], ws: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..ys.len()).collect();
    idx.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let total: f64 = ws.iter().sum();
    let (lo, hi) = (TRIM * total, (1.0 - TRIM) * total);
    let (mut acc, mut num, mut den) = (0.0, 0.0, 0.0);
    for i in idx {
        let (a, b) = (acc, acc + ws[i]);
        acc = b;
        let kept = (b.min(hi) - a.max(lo)).max(0.0);
        num += kept * ys[i];
        den += kept;
    }
    if den > 0.0 {
        num / den
    } else {
        median(ys)
    }
}

fn weighted_median(ys: &[f64], ws: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..ys.len()).collect();
    idx.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]));
    let half = 0.5 * ws.iter().sum::<f64>();
    let mut acc = 0.0;
    for i in idx {
        acc += ws[i];
        if acc >= half {
            return ys[i];
        }
    }
    f64::NAN
}

/// Centered moving average over `|x_j - x_i| <= width / 2`, applied twice.
fn smooth(xs: &[f64], ys: &[f64], width: f64) -> Vec<f64> {
    let pass = |v: &[f64]| -> Vec<f64> {
        let (mut lo, mut hi, mut sum) = (0usize, 0usize, 0.0);
        let mut out = Vec::with_capacity(v.len());
        for i in 0..v.len() {
            while hi < v.len() && xs[hi] <= xs[i] + 0.5 * width {
                sum += v[hi];
                hi += 1;
            }
            while xs[lo] < xs[i] - 0.5 * width {
                sum -= v[lo];
                lo += 1;
            }
            out.push(sum / (hi - lo) as f64);
        }
        out
    };
    let once = pass(ys);
    pass(&once)
}

/// Sign runs of `dev` with hysteresis `tau`: the sign flips only once the
/// deviation passes `tau` on the other side. Points before the first
/// decisive one join the first run.
fn runs(dev: &[f64], tau: f64) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::new();
    let mut state: Option<bool> = None;
    for (i, &d) in dev.iter().enumerate() {
        let next = if d > tau {
            Some(true)
        } else if d < -tau {
            Some(false)
        } else {
            state
        };
        match (state, next) {
            (None, Some(s)) => out.push(Run {
                positive: s,
                start: 0,
                end: i + 1,
            }),
            (Some(a), Some(b)) if a != b => out.push(Run {
                positive: b,
                start: i,
                end: i + 1,
            }),
            _ => {
                if let Some(r) = out.last_mut() {
                    r.end = i + 1;
                }
            }
        }
        state = next;
    }
    out
}

/// Median gap in `x` between the starts of successive positive runs.
fn run_period(xs: &[f64], rs: &[Run]) -> Option<f64> {
    let starts: Vec<f64> = rs
        .iter()
        .skip(1)
        .filter(|r| r.positive)
        .map(|r| xs[r.start])
        .collect();
    let gaps: Vec<f64> = starts.windows(2).map(|w| w[1] - w[0]).collect();
    (!gaps.is_empty()).then(|| median(&gaps))
}

/// `c` as the log-n average of p between the first and last upward crossing.
fn whole_period_level(pts: &[Pt], rs: &[Run]) -> Option<f64> {
    let ups: Vec<usize> = rs
        .iter()
        .skip(1)
        .filter(|r| r.positive)
        .map(|r| r.start)
        .collect();
    let (&a, &b) = (ups.first()?, ups.last()?);
    if b <= a {
        return None;
    }
    let xs: Vec<f64> = pts[a..=b].iter().map(|p| p.x).collect();
    let ws = trapezoid_weights(&xs);
    let den: f64 = ws.iter().sum();
    Some(
        pts[a..=b]
            .iter()
            .zip(&ws)
            .map(|(p, w)| p.y * w)
            .sum::<f64>()
            / den,
    )
}

/// Weighted least-squares parabola; returns the vertex `(x, y)` when it is a
/// genuine maximum (`sign = 1`) or minimum (`sign = -1`) inside the data range.
fn parabola_vertex(xs: &[f64], ys: &[f64], ws: &[f64], sign: f64) -> Option<(f64, f64)> {
    if xs.len() < 3 {
        return None;
    }
    let x0 = xs.iter().sum::<f64>() / xs.len() as f64;
    let mut m = [[0.0f64; 4]; 3];
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        let t = x - x0;
        let basis = [1.0, t, t * t];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += w * basis[r] * basis[c];
            }
            m[r][3] += w * basis[r] * y;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        m.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return None;
        }
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    let (a, b, c) = (m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]);
    if !(sign * c < 0.0) {
        return None;
    }
    let t = -b / (2.0 * c);
    let (lo, hi) = (xs[0] - x0, xs[xs.len() - 1] - x0);
    if !(lo..=hi).contains(&t) {
        return None;
    }
    Some((x0 + t, a + b * t + c * t * t))
}

/// Position and level of the extremum of one run.
fn locate(pts: &[Pt], ys: &[f64], sm: &[f64], run: Run, half_width: f64) -> (f64, f64) {
    let sign = if run.positive { 1.0 } else { -1.0 };
    let k = (run.start..run.end)
        .max_by(|&a, &b| (sign * sm[a]).total_cmp(&(sign * sm[b])))
        .expect("runs are non-empty");
    let mut sel: Vec<usize> = (run.start..run.end)
        .filter(|&j| (pts[j].x - pts[k].x).abs() <= half_width)
        .collect();
    if sel.len() < 3 && k > 0 && k + 1 < pts.len() {
        // sparse stretch: three-point parabola through the neighbours
        sel = vec![k - 1, k, k + 1];
    }
    let xs: Vec<f64> = sel.iter().map(|&j| pts[j].x).collect();
    let vs: Vec<f64> = sel.iter().map(|&j| ys[j]).collect();
    let ws: Vec<f64> = sel
        .iter()
        .map(|&j| 1.0 / (pts[j].e * pts[j].e + 1e-12))
        .collect();
    parabola_vertex(&xs, &vs, &ws, sign).unwrap_or((pts[k].x, sm[k]))
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Extrema, period and level of the oscillation of p_n in `ln n`.
///
/// Only entries with `n >= 3` are used. The level starts as a 10%-trimmed
/// log-n average, sign runs are found with a hysteresis of three typical
/// errors (or a tenth of the median deviation, whichever is larger), and the
/// series is smoothed by a moving average of width `period / smoothing_window`.
/// The level is then re-estimated over whole periods and each interior run
/// yields one extremum, refined by a weighted parabola on the raw values.
/// Monte Carlo errors are propagated to the extrema by a parametric bootstrap.
pub fn detect_waves(series: &PSeries, smoothing_window: u32) -> Result<WaveModel> {
    if smoothing_window == 0 {
        return Err(crate::error::invalid("smoothing window must be >= 1"));
    }
    let pts = points(series);
    if pts.len() < 5 {
        return Err(Error::TooFewPoints {
            found: pts.len(),
            needed: 5,
        });
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    let ws = trapezoid_weights(&xs);
    let c0 = trimmed_mean(&ys, &ws);
    let noise = median(&pts.iter().map(|p| p.e).collect::<Vec<_>>());
    let spread = weighted_median(&ys.iter().map(|y| (y - c0).abs()).collect::<Vec<_>>(), &ws);
    let tau = (3.0 * noise).max(0.1 * spread).max(1e-12);
    let dev = |v: &[f64], c: f64| v.iter().map(|y| y - c).collect::<Vec<f64>>();

    let insufficient = |rs: &[Run]| Error::InsufficientOscillation {
        peaks: rs.iter().filter(|r| r.positive).count(),
    };
    let raw_runs = runs(&dev(&ys, c0), tau);
    let p0 = run_period(&xs, &raw_runs).ok_or_else(|| insufficient(&raw_runs))?;
    let width = p0 / smoothing_window as f64;
    let sm = smooth(&xs, &ys, width);
    let c = whole_period_level(&pts, &runs(&dev(&sm, c0), tau)).unwrap_or(c0);
    let rs = runs(&dev(&sm, c), tau);
    let interior: Vec<Run> = if rs.len() > 2 {
        rs[1..rs.len() - 1].to_vec()
    } else {
        Vec::new()
    };
    let peaks = interior.iter().filter(|r| r.positive).count();
    if peaks < 2 {
        return Err(Error::InsufficientOscillation { peaks });
    }
    let period_guess = run_period(&xs, &rs).unwrap_or(p0);
    let half = period_guess / 6.0;
    let centre: Vec<(f64, f64)> = interior
        .iter()
        .map(|&r| locate(&pts, &ys, &sm, r, half))
        .collect();

    let noisy = pts.iter().any(|p| p.e > 0.0);
    let replicas = if noisy { BOOTSTRAP_REPLICAS } else { 0 };
    let draws: Vec<Vec<(f64, f64)>> = (0..replicas as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(DEFAULT_SEED, Domain::SeriesBootstrap, b);
            let yb: Vec<f64> = pts
                .iter()
                .map(|p| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    p.y + p.e * z
                })
                .collect();
            let smb = smooth(&xs, &yb, width);
            interior
                .iter()
                .map(|&r| locate(&pts, &yb, &smb, r, half))
                .collect()
        })
        .collect();

    let extrema: Vec<Extremum> = interior
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mx: Vec<f64> = draws.iter().map(|d| d[i].0).collect();
            let my: Vec<f64> = draws.iter().map(|d| d[i].1).collect();
            Extremum {
                kind: if r.positive {
                    ExtremumKind::Peak
                } else {
                    ExtremumKind::Trough
                },
                log_n: centre[i].0,
                log_n_err: std_dev(&mx),
                amplitude: centre[i].1 - c,
                amplitude_err: std_dev(&my),
            }
        })
        .collect();
    let peak_x: Vec<f64> = extrema
        .iter()
        .filter(|e| e.kind == ExtremumKind::Peak)
        .map(|e| e.log_n)
        .collect();
    let mut model = WaveModel {
        c,
        extrema,
        period_estimates: peak_x.windows(2).map(|w| w[1] - w[0]).collect(),
        kappa_prime: None,
        smoothing_width: width,
        bootstrap_replicas: replicas,
    };
    model.kappa_prime = fit_wave_decay(&model).ok().map(|d| d.kappa_prime);
    Ok(model)
}

/// Fit of the damping heuristic `h(M + 1) = h(M) (1 - kappa' e^-M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveDecay {
    pub kappa_prime: f64,
    /// `prod_{i >= 0} (1 - kappa' e^{-M_0 - i})`; positive iff `kappa' e^{-M_0} < 1`.
    pub product_limit: f64,
    pub m0: f64,
    /// `(M_i, h_{i+1} / h_i)` for successive extrema of the same kind.
    pub ratios: Vec<(f64, f64)>,
}

/// Least-squares `kappa'` from successive same-kind amplitude ratios.
///
/// Minimises `sum (r_i - 1 + kappa' e^{-M_i})^2`, clamped at zero, so scaling
/// every amplitude by a positive constant leaves it unchanged.
pub fn fit_wave_decay(model: &WaveModel) -> Result<WaveDecay> {
    let mut ratios = Vec::new();
    let mut most = 0;
    for kind in [ExtremumKind::Peak, ExtremumKind::Trough] {
        let same: Vec<&Extremum> = model.extrema.iter().filter(|e| e.kind == kind).collect();
        most = most.max(same.len());
        for w in same.windows(2) {
            ratios.push((w[0].log_n, w[1].amplitude / w[0].amplitude));
        }
    }
    if most < 3 {
        return Err(Error::TooFewPoints {
            found: most,
            needed: 3,
        });
    }
    if let Some(&(m, r)) = ratios.iter().find(|(_, r)| !(*r > 0.0)) {
        return Err(Error::ModelViolation(format!(
            "amplitude ratio {r} at ln n = {m} is not positive"
        )));
    }
    ratios.sort_by(|a, b| a.0.total_cmp(&b.0));
    let num: f64 = ratios.iter().map(|(m, r)| (1.0 - r) * (-m).exp()).sum();
    let den: f64 = ratios.iter().map(|(m, _)| (-2.0 * m).exp()).sum();
    let kappa_prime = (num / den).max(0.0);
    let m0 = ratios[0].0;
    Ok(WaveDecay {
        kappa_prime,
        product_limit: decay_product(kappa_prime, m0),
        m0,
        ratios,
    })
}

fn decay_product(kappa: f64, m0: f64) -> f64 {
    let mut prod = 1.0;
    for i in 0.. {
        let t = kappa * (-m0 - i as f64).exp();
        prod *= 1.0 - t;
        if t < 1e-18 || prod == 0.0 {
            break;
        }
    }
    prod
}

/// One row of the plot-ready table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n: u64,
    pub log_n: f64,
    pub p: f64,
    pub err: f64,
    pub smoothed: f64,
    pub c: f64,
}

/// The series with the smoothing and level of `model` alongside.
pub fn wave_trace(series: &PSeries, model: &WaveModel) -> Vec<TracePoint> {
    let entries: Vec<_> = series.entries().iter().filter(|e| e.n >= 3).collect();
    let pts = points(series);
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    let sm = smooth(&xs, &ys, model.smoothing_width);
    entries
        .iter()
        .zip(&pts)
        .zip(sm)
        .map(|((e, p), s)| TracePoint {
            n: e.n,
            log_n: p.x,
            p: p.y,
            err: p.e,
            smoothed: s,
            c: model.c,
        })
        .collect()
}

/// CSV with columns `log_n,p,err,smoothed,c`.
pub fn write_trace_csv<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["log_n", "p", "err", "smoothed", "c"])?;
    for t in trace {
        w.write_record([
            format_f64(t.log_n),
            format_f64(t.p),
            format_f64(t.err),
            format_f64(t.smoothed),
            format_f64(t.c),
        ])?;
    }
    w.flush()?;
    Ok(())
}
