//! Distance covariance and correlation for scalar samples, and the
//! uncorrelated-but-dependent density built from `q` with `c = sqrt(2) - 1`.

mod intro;

pub use intro::IntroDensity;

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Domain};
use crate::series::format_f64;

/// Default bootstrap size for standard errors.
pub const DEFAULT_BOOTSTRAP: u32 = 200;

/// Paired scalar observations `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(invalid(format!(
                "paired sample needs equal lengths, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("paired sample values must be finite"));
        }
        Ok(PairedSample { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Two-column CSV with header `x,y`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y"])?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            w.write_record([format_f64(*x), format_f64(*y)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse(format!(
                    "expected 2 columns, got {}",
                    rec.len()
                )));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            xs.push(num(&rec[0])?);
            ys.push(num(&rec[1])?);
        }
        PairedSample::new(xs, ys)
    }
}

fn need_two(m: usize) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("need at least 2 observations, got {m}")));
    }
    Ok(())
}

/// `sum_{j > i} |x_i - x_j| |y_i - y_j|` for one `i`, over four lanes.
fn row_cross(x: &[f64], y: &[f64], i: usize) -> f64 {
    let (xi, yi) = (x[i], y[i]);
    let (xr, yr) = (&x[i + 1..], &y[i + 1..]);
    let mut acc = [0.0f64; 4];
    let xc = xr.chunks_exact(4);
    let yc = yr.chunks_exact(4);
    let (xt, yt) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += (xi - a[l]).abs() * (yi - b[l]).abs();
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (a, b) in xt.iter().zip(yt) {
        s += (xi - a).abs() * (yi - b).abs();
    }
    s
}

/// `sum_{i < j} |x_i - x_j| |y_i - y_j|`, summed in a fixed order.
fn pair_cross(x: &[f64], y: &[f64]) -> f64 {
    (0..x.len()).map(|i| row_cross(x, y, i)).sum()
}

fn pair_cross_par(x: &[f64], y: &[f64]) -> f64 {
    let rows: Vec<f64> = (0..x.len())
        .into_par_iter()
        .map(|i| row_cross(x, y, i))
        .collect();
    rows.iter().sum()
}

/// `(1/m) sum_j |v_i - v_j|` for every `i`.
fn row_means(v: &[f64]) -> Vec<f64> {
    let m = v.len() as f64;
    v.par_iter()
        .map(|&a| v.iter().map(|&b| (a - b).abs()).sum::<f64>() / m)
        .collect()
}

struct Centred {
    ax: Vec<f64>,
    bx: Vec<f64>,
    a: f64,
    b: f64,
}

fn centred(x: &[f64], y: &[f64]) -> Centred {
    let ax = row_means(x);
    let bx = row_means(y);
    let m = x.len() as f64;
    let a = ax.iter().sum::<f64>() / m;
    let b = bx.iter().sum::<f64>() / m;
    Centred { ax, bx, a, b }
}

fn dcov2_from(cross: f64, rows: f64, c: &Centred, m: f64) -> f64 {
    2.0 * cross / (m * m) - 2.0 * rows / m + c.a * c.b
}

/// Squared distance covariance as a V-statistic.
///
/// Evaluates `E|X-X'||Y-Y'| + E|X-X'| E|Y-Y'| - 2 E|X-X'||Y-Y''|` at the
/// empirical measure. This equals the mean of the product of the two
/// double-centred distance matrices, but needs only the row means of each
/// matrix, so memory is linear in `m`.
pub fn dcov2_vstat(s: &PairedSample) -> Result<f64> {
    need_two(s.len())?;
    Ok(dcov2(&s.xs, &s.ys))
}

fn dcov2(x: &[f64], y: &[f64]) -> f64 {
    let c = centred(x, y);
    let rows: f64 = c.ax.iter().zip(&c.bx).map(|(a, b)| a * b).sum();
    dcov2_from(pair_cross_par(x, y), rows, &c, x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dcor {
    pub value: f64,
    /// The raw ratio fell outside `[0, 1]` by rounding and was clipped.
    pub clipped: bool,
}

/// Distance correlation `dCov(X,Y) / sqrt(dCov(X,X) dCov(Y,Y))`.
pub fn dcor(s: &PairedSample) -> Result<Dcor> {
    need_two(s.len())?;
    let xx = dcov2(&s.xs, &s.xs);
    let yy = dcov2(&s.ys, &s.ys);
    for (v, d) in [(xx, &s.xs), (yy, &s.ys)] {
        let scale = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !(v > 1e-24 * scale * scale) || scale == 0.0 {
            return Err(Error::DegenerateMarginal(v));
        }
    }
    let ratio = dcov2(&s.xs, &s.ys) / (xx * yy).sqrt();
    let clipped = !(0.0..=1.0).contains(&ratio);
    Ok(Dcor {
        value: ratio.clamp(0.0, 1.0).sqrt(),
        clipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermTest {
    /// Observed squared distance covariance.
    pub statistic: f64,
    pub p_value: f64,
    pub permutations: u32,
    pub seed: u64,
}

/// Permutation test of `dCor = 0` by shuffling `ys`.
///
/// The dCor denominators do not change under permutation, so the squared
/// distance covariance is used as the statistic. Replica `b` shuffles with
/// its own stream; `p = (1 + #{stat_b >= stat}) / (B + 1)`.
pub fn perm_test_dcor(s: &PairedSample, permutations: u32, seed: u64) -> Result<PermTest> {
    need_two(s.len())?;
    if permutations < 99 {
        return Err(invalid(format!(
            "need at least 99 permutations, got {permutations}"
        )));
    }
    let m = s.len() as f64;
    let c = centred(&s.xs, &s.ys);
    let rows: f64 = c.ax.iter().zip(&c.bx).map(|(a, b)| a * b).sum();
    let stat = dcov2_from(pair_cross_par(&s.xs, &s.ys), rows, &c, m);
    let exceed: u32 = (0..permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Domain::Permutation, b);
            let mut perm: Vec<usize> = (0..s.len()).collect();
            perm.shuffle(&mut rng);
            let yp: Vec<f64> = perm.iter().map(|&i| s.ys[i]).collect();
            let rows_p: f64 = perm.iter().zip(&c.ax).map(|(&i, a)| a * c.bx[i]).sum();
            let v = dcov2_from(pair_cross(&s.xs, &yp), rows_p, &c, m);
            u32::from(v >= stat)
        })
        .sum();
    Ok(PermTest {
        statistic: stat,
        p_value: (1 + exceed) as f64 / (permutations as f64 + 1.0),
        permutations,
        seed,
    })
}

/// Covariance of `|X - X'|` and `|Y - Y'|` over the distinct pairs `i < j`.
pub fn cov_sym_abs_diff(s: &PairedSample) -> Result<f64> {
    need_two(s.len())?;
    Ok(cov_abs(&s.xs, &s.ys))
}

fn cov_abs(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let pairs = m * (m - 1.0) / 2.0;
    // sum over ordered pairs is m^2 times the mean row mean; halve for i < j
    let mean_dist = |v: &[f64]| row_means(v).iter().sum::<f64>() * m / 2.0 / pairs;
    pair_cross_par(x, y) / pairs - mean_dist(x) * mean_dist(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub value: f64,
    pub stderr: f64,
    pub bootstrap: u32,
    pub seed: u64,
}

/// [`cov_sym_abs_diff`] with a nonparametric bootstrap standard error.
pub fn cov_sym_abs_diff_bootstrap(
    s: &PairedSample,
    bootstrap: u32,
    seed: u64,
) -> Result<CovEstimate> {
    need_two(s.len())?;
    if bootstrap < 2 {
        return Err(invalid("bootstrap needs at least 2 replicas"));
    }
    let value = cov_abs(&s.xs, &s.ys);
    let reps: Vec<f64> = (0..bootstrap as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, Domain::Bootstrap, b);
            let idx: Vec<usize> = (0..s.len()).map(|_| rng.random_range(0..s.len())).collect();
            let xb: Vec<f64> = idx.iter().map(|&i| s.xs[i]).collect();
            let yb: Vec<f64> = idx.iter().map(|&i| s.ys[i]).collect();
            cov_abs(&xb, &yb)
        })
        .collect();
    let mean = reps.iter().sum::<f64>() / reps.len() as f64;
    let var = reps.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (reps.len() - 1) as f64;
    Ok(CovEstimate {
        value,
        stderr: var.sqrt(),
        bootstrap,
        seed,
    })
}
