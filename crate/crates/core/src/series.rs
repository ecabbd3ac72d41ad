//! The `p_n` series with per-entry provenance, and its CSV/JSON encodings.

use std::io::{Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::McEstimate;

pub const PSERIES_CSV_SCHEMA: &str = "# roulette-lab pseries v1";
pub const PSERIES_CSV_HEADER: [&str; 9] = [
    "n",
    "k",
    "numerator",
    "denominator",
    "value_decimal",
    "err_radius",
    "provenance",
    "reps",
    "seed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Certified,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Certified => "certified",
            Provenance::MonteCarlo => "monte_carlo",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Provenance::Exact),
            "certified" => Ok(Provenance::Certified),
            "monte_carlo" => Ok(Provenance::MonteCarlo),
            other => Err(Error::Parse(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PValue {
    Exact(BigRational),
    /// Certified enclosure: the true value lies in `[value - radius, value + radius]`.
    Certified {
        value: f64,
        radius: f64,
        flagged: bool,
    },
    MonteCarlo(McEstimate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PEntry {
    pub n: u64,
    pub value: PValue,
}

impl PEntry {
    pub fn exact(n: u64, value: BigRational) -> Self {
        PEntry {
            n,
            value: PValue::Exact(value),
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self.value {
            PValue::Exact(_) => Provenance::Exact,
            PValue::Certified { .. } => Provenance::Certified,
            PValue::MonteCarlo(_) => Provenance::MonteCarlo,
        }
    }

    pub fn value_f64(&self) -> f64 {
        match &self.value {
            PValue::Exact(r) => rational_to_f64(r),
            PValue::Certified { value, .. } => *value,
            PValue::MonteCarlo(e) => e.point,
        }
    }

    /// Error radius (certified) or standard error (Monte Carlo); zero when exact.
    pub fn error(&self) -> f64 {
        match &self.value {
            PValue::Exact(_) => 0.0,
            PValue::Certified { radius, .. } => *radius,
            PValue::MonteCarlo(e) => e.stderr,
        }
    }
}

/// Ordered `(n, p_n)` entries.
///
/// Invariants: strictly increasing `n`; every value in `[0, 1]` up to its
/// error; entries for `n = 0, 1, 2` equal `0, 1, 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PSeries {
    entries: Vec<PEntry>,
}

impl PSeries {
    pub fn new(entries: Vec<PEntry>) -> Result<Self> {
        let s = PSeries { entries };
        s.validate()?;
        Ok(s)
    }

    pub fn entries(&self) -> &[PEntry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<PEntry> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: u64) -> Option<&PEntry> {
        self.entries
            .binary_search_by_key(&n, |e| e.n)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn validate(&self) -> Result<()> {
        for w in self.entries.windows(2) {
            if w[1].n <= w[0].n {
                return Err(invalid(format!(
                    "series n values must be strictly increasing ({} then {})",
                    w[0].n, w[1].n
                )));
            }
        }
        for e in &self.entries {
            let (v, err) = (e.value_f64(), e.error());
            let slack = err.max(0.0) * 4.0 + 1e-12;
            if !v.is_finite() || v < -slack || v > 1.0 + slack {
                return Err(invalid(format!("p_{} = {v} is not a probability", e.n)));
            }
            if e.n <= 2 {
                let want = if e.n == 1 { 1.0 } else { 0.0 };
                if (v - want).abs() > 0.0 {
                    return Err(invalid(format!("p_{} must be {want}, got {v}", e.n)));
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "{PSERIES_CSV_SCHEMA}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(PSERIES_CSV_HEADER)?;
        for e in &self.entries {
            let n = e.n.to_string();
            let rec: Vec<String> = match &e.value {
                PValue::Exact(r) => vec![
                    n,
                    String::new(),
                    r.numer().to_string(),
                    r.denom().to_string(),
                    rational_sci(r, 17),
                    format_f64(0.0),
                    Provenance::Exact.as_str().into(),
                    String::new(),
                    String::new(),
                ],
                PValue::Certified { value, radius, .. } => vec![
                    n,
                    String::new(),
                    String::new(),
                    String::new(),
                    format_f64(*value),
                    format_f64(*radius),
                    Provenance::Certified.as_str().into(),
                    String::new(),
                    String::new(),
                ],
                PValue::MonteCarlo(m) => vec![
                    n,
                    String::new(),
                    String::new(),
                    String::new(),
                    format_f64(m.point),
                    format_f64(m.stderr),
                    Provenance::MonteCarlo.as_str().into(),
                    m.reps.to_string(),
                    m.seed.to_string(),
                ],
            };
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .has_headers(true)
            .from_reader(input);
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let n: u64 = parse_num(field(0), "n")?;
            let value = match Provenance::parse(field(6))? {
                Provenance::Exact => {
                    let num: BigInt = parse_num(field(2), "numerator")?;
                    let den: BigInt = parse_num(field(3), "denominator")?;
                    if den.is_zero() {
                        return Err(Error::Parse("zero denominator".into()));
                    }
                    PValue::Exact(BigRational::new(num, den))
                }
                Provenance::Certified => PValue::Certified {
                    value: parse_num(field(4), "value_decimal")?,
                    radius: parse_num(field(5), "err_radius")?,
                    flagged: false,
                },
                Provenance::MonteCarlo => PValue::MonteCarlo(McEstimate {
                    point: parse_num(field(4), "value_decimal")?,
                    stderr: parse_num(field(5), "err_radius")?,
                    reps: parse_num(field(7), "reps")?,
                    seed: parse_num(field(8), "seed")?,
                }),
            };
            entries.push(PEntry { n, value });
        }
        PSeries::new(entries)
    }

    pub fn to_json(&self) -> PSeriesJson {
        PSeriesJson {
            schema: PSERIES_JSON_SCHEMA.into(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryJson {
                    n: e.n,
                    value: match &e.value {
                        PValue::Exact(r) => ValueJson::Exact {
                            numerator: r.numer().to_string(),
                            denominator: r.denom().to_string(),
                            decimal: rational_sci(r, 17),
                        },
                        PValue::Certified {
                            value,
                            radius,
                            flagged,
                        } => ValueJson::Certified {
                            value: *value,
                            radius: *radius,
                            flagged: *flagged,
                        },
                        PValue::MonteCarlo(m) => ValueJson::MonteCarlo {
                            point: m.point,
                            stderr: m.stderr,
                            reps: m.reps,
                            seed: m.seed,
                        },
                    },
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &PSeriesJson) -> Result<Self> {
        if doc.schema != PSERIES_JSON_SCHEMA {
            return Err(Error::Parse(format!("unexpected schema {:?}", doc.schema)));
        }
        let mut entries = Vec::with_capacity(doc.entries.len());
        for e in &doc.entries {
            let value = match &e.value {
                ValueJson::Exact {
                    numerator,
                    denominator,
                    ..
                } => {
                    let num: BigInt = parse_num(numerator, "numerator")?;
                    let den: BigInt = parse_num(denominator, "denominator")?;
                    if den.is_zero() {
                        return Err(Error::Parse("zero denominator".into()));
                    }
                    PValue::Exact(BigRational::new(num, den))
                }
                ValueJson::Certified {
                    value,
                    radius,
                    flagged,
                } => PValue::Certified {
                    value: *value,
                    radius: *radius,
                    flagged: *flagged,
                },
                ValueJson::MonteCarlo {
                    point,
                    stderr,
                    reps,
                    seed,
                } => PValue::MonteCarlo(McEstimate {
                    point: *point,
                    stderr: *stderr,
                    reps: *reps,
                    seed: *seed,
                }),
            };
            entries.push(PEntry { n: e.n, value });
        }
        PSeries::new(entries)
    }

    /// Reads either encoding; JSON is recognised by a leading `{`.
    pub fn read_any<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        if text.trim_start().starts_with('{') {
            let doc: PSeriesJson = serde_json::from_str(&text)?;
            PSeries::from_json(&doc)
        } else {
            PSeries::read_csv(text.as_bytes())
        }
    }
}

pub const PSERIES_JSON_SCHEMA: &str = "roulette-lab/pseries/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PSeriesJson {
    pub schema: String,
    pub entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub n: u64,
    #[serde(flatten)]
    pub value: ValueJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "provenance", rename_all = "snake_case")]
pub enum ValueJson {
    Exact {
        numerator: String,
        denominator: String,
        decimal: String,
    },
    Certified {
        value: f64,
        radius: f64,
        flagged: bool,
    },
    MonteCarlo {
        point: f64,
        stderr: f64,
        reps: u64,
        seed: u64,
    },
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {what} field {s:?}")))
}

/// 17 significant digits in `d.dddde±x` form, matching `format_f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Correctly rounded (half away from zero) scientific rendering of an exact
/// rational with `digits` significant digits.
pub fn rational_sci(r: &BigRational, digits: usize) -> String {
    assert!(digits >= 1);
    if r.is_zero() {
        return format!("{:.*e}", digits - 1, 0.0);
    }
    let neg = r.is_negative();
    let num = r.numer().abs();
    let den = r.denom().abs();
    let ten = BigInt::from(10u32);
    // 10^e <= num/den < 10^(e+1)
    let mut e =
        ((num.bits() as f64 - den.bits() as f64) * std::f64::consts::LOG10_2).floor() as i64;
    let ge = |e: i64| -> bool {
        if e >= 0 {
            num >= &den * ten.pow(e as u32)
        } else {
            &num * ten.pow((-e) as u32) >= den
        }
    };
    while !ge(e) {
        e -= 1;
    }
    while ge(e + 1) {
        e += 1;
    }
    let shift = digits as i64 - 1 - e;
    let (sn, sd) = if shift >= 0 {
        (&num * ten.pow(shift as u32), den.clone())
    } else {
        (num.clone(), &den * ten.pow((-shift) as u32))
    };
    let two = BigInt::from(2u32);
    let mut q = (&sn * &two + &sd) / (&sd * &two);
    if q >= ten.pow(digits as u32) {
        q /= &ten;
        e += 1;
    }
    let s = q.to_string();
    let (head, tail) = s.split_at(1);
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}

/// Nearest-ish f64 of an exact rational (relative error below 2^-52).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    ratio_to_f64(r.numer(), r.denom())
}

pub fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let neg = num.is_negative() != den.is_negative();
    let (num, den) = (num.abs(), den.abs());
    // Scale so the integer quotient carries 64+ significant bits.
    let shift = 66 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        (num >> (-shift) as usize) / den
    };
    let mant = q.to_f64().unwrap_or(f64::INFINITY);
    let exp = (-shift).clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32;
    let v = libm::ldexp(mant, exp);
    if neg {
        -v
    } else {
        v
    }
}
