use std::fmt::Write;

use crate::error::{invalid, Result};
use crate::merging::TracePoint;
use crate::series::{PSeries, Provenance};

const W: f64 = 900.0;
const H: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// SVG chart of p against `ln n`.
///
/// Exact entries are circles, certified ones squares and Monte Carlo ones
/// diamonds with one-standard-error bars. `n = 0` has no logarithm and is
/// left out. The output depends only on the series, byte for byte.
pub fn emit_plot(series: &PSeries) -> Result<String> {
    render(series, None)
}

/// [`emit_plot`] with the smoothed curve and the level `c` drawn over it.
pub fn emit_plot_with_trace(series: &PSeries, trace: &[TracePoint]) -> Result<String> {
    render(series, Some(trace))
}

fn render(series: &PSeries, trace: Option<&[TracePoint]>) -> Result<String> {
    let pts: Vec<(f64, f64, f64, Provenance)> = series
        .entries()
        .iter()
        .filter(|e| e.n >= 1)
        .map(|e| ((e.n as f64).ln(), e.value_f64(), e.error(), e.provenance()))
        .collect();
    if pts.is_empty() {
        return Err(invalid("cannot plot an empty series"));
    }
    let x_lo = 0.0f64.min(pts[0].0);
    let x_hi = pts.iter().map(|p| p.0).fold(x_lo + 1.0, f64::max).ceil();
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, y, e, prov) in &pts {
        let e = if prov == Provenance::MonteCarlo {
            e
        } else {
            0.0
        };
        y_lo = y_lo.min(y - e);
        y_hi = y_hi.max(y + e);
    }
    let (y_lo, y_hi) = ((y_lo * 10.0).floor() / 10.0, (y_hi * 10.0).ceil() / 10.0);
    let (y_lo, y_hi) = if y_hi > y_lo {
        (y_lo, y_hi)
    } else {
        (y_lo - 0.1, y_hi + 0.1)
    };
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">p_n against ln n</text>"#,
        W / 2.0
    );
    let (x0, x1, y0, y1) = (sx(x_lo), sx(x_hi), sy(y_lo), sy(y_hi));
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} L{x0:.2},{y0:.2} L{x1:.2},{y0:.2}" fill="none" stroke="black"/>"#
    );
    let mut k = x_lo.ceil();
    while k <= x_hi {
        let x = sx(k);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
        k += 1.0;
    }
    let steps = ((y_hi - y_lo) / 0.05).round() as i64;
    for i in 0..=steps {
        let v = y_lo + i as f64 * 0.05;
        let y = sy(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">ln n</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">p_n</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );

    if let Some(trace) = trace {
        if let Some(c) = trace.first().map(|t| t.c) {
            let _ = writeln!(
                s,
                r##"<line class="level" x1="{x0:.2}" y1="{:.2}" x2="{x1:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="6 4"/>"##,
                sy(c),
                sy(c)
            );
        }
        let mut d = String::new();
        for (i, t) in trace.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if i == 0 { "M" } else { "L" },
                sx(t.log_n),
                sy(t.smoothed)
            );
        }
        let _ = writeln!(
            s,
            r##"<path class="smoothed" d="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
            d.trim_end()
        );
    }

    for &(x, y, e, prov) in &pts {
        let (cx, cy) = (sx(x), sy(y));
        match prov {
            Provenance::Exact => {
                let _ = writeln!(
                    s,
                    r##"<circle class="exact" cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="#1f77b4"/>"##
                );
            }
            Provenance::Certified => {
                let _ = writeln!(
                    s,
                    r##"<rect class="certified" x="{:.2}" y="{:.2}" width="5" height="5" fill="#2ca02c"/>"##,
                    cx - 2.5,
                    cy - 2.5
                );
            }
            Provenance::MonteCarlo => {
                let _ = writeln!(
                    s,
                    r##"<line class="errorbar" x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#ff7f0e"/>"##,
                    sy(y - e),
                    sy(y + e)
                );
                let _ = writeln!(
                    s,
                    r##"<path class="monte_carlo" d="M{cx:.2},{:.2} L{:.2},{cy:.2} L{cx:.2},{:.2} L{:.2},{cy:.2} Z" fill="#ff7f0e"/>"##,
                    cy - 4.0,
                    cx + 4.0,
                    cy + 4.0,
                    cx - 4.0
                );
            }
        }
    }
    let legend = [
        ("#1f77b4", "exact"),
        ("#2ca02c", "certified"),
        ("#ff7f0e", "Monte Carlo, 1 s.e."),
    ];
    for (i, (color, label)) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            W - 190.0,
            y - 9.0,
            W - 175.0,
            y
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{PEntry, PValue};
    use crate::sim::McEstimate;
    use num_rational::BigRational;

    fn exact(n: u64, a: i64, b: i64) -> PEntry {
        PEntry::exact(n, BigRational::new(a.into(), b.into()))
    }

    #[test]
    fn exact_series_has_no_error_bars() {
        let s = PSeries::new(vec![exact(3, 3, 4), exact(4, 16, 27), exact(5, 15, 32)]).unwrap();
        let svg = emit_plot(&s).unwrap();
        assert_eq!(svg.matches(r#"class="exact""#).count(), 3);
        assert_eq!(svg.matches("errorbar").count(), 0);
        assert_eq!(svg, emit_plot(&s).unwrap());
    }

    #[test]
    fn error_bars_only_on_monte_carlo() {
        let mc = PEntry {
            n: 50,
            value: PValue::MonteCarlo(McEstimate {
                point: 0.47,
                stderr: 0.01,
                reps: 1000,
                seed: 1,
            }),
        };
        let s = PSeries::new(vec![exact(3, 3, 4), exact(4, 16, 27), mc]).unwrap();
        let svg = emit_plot(&s).unwrap();
        assert_eq!(svg.matches(r#"class="errorbar""#).count(), 1);
        assert_eq!(svg.matches(r#"class="monte_carlo""#).count(), 1);
        assert!(emit_plot(&PSeries::default()).is_err());
    }
}
