//! The `roulette` command line.
//!
//! Every subcommand writes CSV or JSON to `--out` (or stdout). Files are
//! written to a temporary sibling first and renamed into place, so a failed
//! run never leaves partial output. Exit codes: 0 success, 1 invalid input or
//! runtime error, 2 a check that ran but did not pass.

mod plot;

pub use plot::{emit_plot, emit_plot_with_trace};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytic::{charfn_suite, feq_suite, CheckReport};
use crate::energy::{
    cov_sym_abs_diff_bootstrap, dcor, dcov2_vstat, perm_test_dcor, CovEstimate, Dcor, IntroDensity,
    PairedSample, PermTest,
};
use crate::error::{invalid, Error, Result};
use crate::exact::{survivor_pmf, CertifiedConfig, Limits, RecurrenceMode};
use crate::merging::{
    build_series, detect_waves, log_grid, subsequence_probe, wave_trace, write_trace_csv,
    SubseqProbe, WaveModel,
};
use crate::rng::DEFAULT_SEED;
use crate::series::{format_f64, rational_sci, PSeries};
use crate::sim::{
    clt_check, coupling_check, estimate_p, mcdiarmid_check, CentrePolicy, CltReport,
    CouplingReport, McDiarmidTable, McEstimate,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Exact rationals up to n = 200, certified fixed point beyond.
    Auto,
    Exact,
    Certified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Centre {
    FiniteMean,
    Limit,
}

#[derive(Debug, Parser)]
#[command(
    name = "roulette",
    version,
    about = "Hungarian roulette survival probabilities and related checks"
)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write an SVG chart next to `--out`, with extension `.svg`.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Fractional bits of the certified recurrence (at least 64).
    #[arg(long, global = true, default_value_t = 128)]
    pub precision_bits: u32,
    /// Largest n for exact rational arithmetic.
    #[arg(long, global = true, default_value_t = Limits::default().exact_ceiling)]
    pub exact_ceiling: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Existing series (CSV or JSON) instead of computing one.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Last n of the recurrence segment; 0 for none.
    #[arg(long, default_value_t = 0)]
    pub exact_to: u64,
    /// Monte Carlo n values: `a,b,c` or `log:LO:HI:PER_UNIT`.
    #[arg(long)]
    pub mc_grid: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, value_enum, default_value_t = Mode::Auto)]
    pub mode: Mode,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact distribution of first-round survivors.
    Pmf {
        #[arg(long)]
        n: u64,
    },
    /// The p_n series from the recurrence and Monte Carlo.
    Pseries(SeriesArgs),
    /// Monte Carlo estimate of p_n.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
    },
    /// Normal limit of the first-round survivor count.
    Clt {
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, value_enum, default_value_t = Centre::FiniteMean)]
        centre: Centre,
    },
    /// Empirical tails against the bounded-differences bound.
    Mcdiarmid {
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        /// Comma-separated epsilon values.
        #[arg(long, default_value = "0,10,20,30,40,50,60,70,80,90,100")]
        eps: String,
    },
    /// Coupling of the game round with the self-shooting urn variant.
    Coupling {
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
    },
    /// Extrema, period and decay of the oscillation in ln n.
    Waves {
        #[command(flatten)]
        series: SeriesArgs,
        /// Ratio of period to smoothing width.
        #[arg(long, default_value_t = crate::merging::DEFAULT_SMOOTHING)]
        smoothing: u32,
    },
    /// Entries with a fixed fractional part of ln n.
    Subseq {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long)]
        phi: f64,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Distance covariance, correlation and permutation test of a paired sample.
    Dcov {
        /// Two-column CSV `x,y`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 999)]
        perms: u32,
    },
    /// Sample the uncorrelated-but-dependent density and test both claims.
    Introdemo {
        /// Sample size.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 199)]
        perms: u32,
        #[arg(long, default_value_t = crate::energy::DEFAULT_BOOTSTRAP)]
        bootstrap: u32,
        /// Also write the sample as CSV.
        #[arg(long)]
        sample_out: Option<PathBuf>,
    },
    /// Functional-equation checks.
    Feq,
    /// Characteristic-function checks.
    Charfn {
        /// Comma-separated levels y.
        #[arg(long, default_value = "-1,0.1,1,10", allow_hyphen_values = true)]
        y: String,
    },
}

/// JSON wrapper carrying a versioned schema name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Doc<T> {
    pub schema: String,
    pub data: T,
}

fn doc<T>(name: &str, data: T) -> Doc<T> {
    Doc {
        schema: format!("roulette-lab/{name}/v1"),
        data,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfRow {
    pub k: u64,
    pub numerator: String,
    pub denominator: String,
    pub value_decimal: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfDoc {
    pub n: u64,
    pub rows: Vec<PmfRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateDoc {
    pub n: u64,
    pub estimate: McEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcovDoc {
    pub m: usize,
    pub dcov2: f64,
    pub dcor: Dcor,
    pub perm_test: PermTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntroDoc {
    pub m: usize,
    pub c: f64,
    pub cov_sym_abs_diff: CovEstimate,
    /// `|cov| <= 4 stderr`.
    pub uncorrelated: bool,
    pub perm_test: PermTest,
    /// `p < 0.01`.
    pub dependent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChecksDoc {
    pub checks: Vec<CheckReport>,
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    if cli.plot && cli.out.is_none() {
        eprintln!("error: invalid argument: --plot needs --out to place the SVG");
        return EXIT_INVALID;
    }
    let threads = match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be at least 1");
            return EXIT_INVALID;
        }
        Some(t) => t,
        None => rayon::current_num_threads(),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn limits(cli: &Cli) -> Limits {
    Limits {
        exact_ceiling: cli.exact_ceiling,
        ..Limits::default()
    }
}

fn recurrence_mode(cli: &Cli, mode: Mode, exact_to: u64) -> Result<RecurrenceMode> {
    if cli.precision_bits < 64 {
        return Err(invalid(format!(
            "--precision-bits must be at least 64, got {}",
            cli.precision_bits
        )));
    }
    let certified = RecurrenceMode::Certified(CertifiedConfig {
        precision_bits: cli.precision_bits,
        ..CertifiedConfig::default()
    });
    Ok(match mode {
        Mode::Exact => RecurrenceMode::Exact,
        Mode::Certified => certified,
        Mode::Auto if exact_to <= 200 => RecurrenceMode::Exact,
        Mode::Auto => certified,
    })
}

/// `a,b,c` or `log:LO:HI:PER_UNIT`.
pub fn parse_grid(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(invalid(format!(
                "log grid needs LO:HI:PER_UNIT, got {rest:?}"
            )));
        }
        let lo = parts[0]
            .parse()
            .map_err(|_| invalid(format!("bad LO {:?}", parts[0])))?;
        let hi = parts[1]
            .parse()
            .map_err(|_| invalid(format!("bad HI {:?}", parts[1])))?;
        let per = parts[2]
            .parse()
            .map_err(|_| invalid(format!("bad PER_UNIT {:?}", parts[2])))?;
        return log_grid(lo, hi, per);
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| invalid(format!("bad grid entry {s:?}")))
        })
        .collect()
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| invalid(format!("bad number {s:?}")))
        })
        .collect()
}

fn load_series(cli: &Cli, a: &SeriesArgs) -> Result<PSeries> {
    if let Some(path) = &a.input {
        return PSeries::read_any(std::fs::File::open(path)?);
    }
    let grid = match &a.mc_grid {
        Some(g) => parse_grid(g)?,
        None => Vec::new(),
    };
    let mode = recurrence_mode(cli, a.mode, a.exact_to)?;
    build_series(a.exact_to, &grid, a.reps, cli.seed, mode, &limits(cli))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(cli: &Cli, bytes: &[u8]) -> Result<()> {
    match &cli.out {
        Some(p) => write_atomic(p, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn emit_svg(cli: &Cli, svg: impl FnOnce() -> Result<String>) -> Result<()> {
    if !cli.plot {
        return Ok(());
    }
    let out = cli
        .out
        .as_ref()
        .ok_or_else(|| invalid("--plot needs --out to place the SVG"))?;
    write_atomic(&out.with_extension("svg"), svg()?.as_bytes())
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

/// Flattens a JSON object into `field,value` rows.
fn flat_csv<T: Serialize>(schema: &str, v: &T) -> Result<Vec<u8>> {
    fn walk(prefix: &str, v: &serde_json::Value, out: &mut Vec<(String, String)>) {
        match v {
            serde_json::Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, x, out);
                }
            }
            serde_json::Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), x, out);
                }
            }
            serde_json::Value::String(s) => out.push((prefix.into(), s.clone())),
            other => out.push((prefix.into(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", &serde_json::to_value(v)?, &mut rows);
    let mut buf = format!("# roulette-lab {schema} v1\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["field", "value"])?;
        for (k, v) in rows {
            w.write_record([k, v])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn checks_csv(checks: &[CheckReport], schema: &str) -> Result<Vec<u8>> {
    let mut buf = format!("# roulette-lab {schema} v1\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record([
            "property",
            "grid",
            "max_residual",
            "comparison",
            "tolerance",
            "pass",
        ])?;
        for c in checks {
            w.write_record([
                c.property.clone(),
                c.grid.clone(),
                format_f64(c.max_residual),
                format!("{:?}", c.comparison).to_lowercase(),
                format_f64(c.tolerance),
                c.pass.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Pmf { n } => {
            let pmf = survivor_pmf(*n, &limits(cli))?;
            let rows: Vec<PmfRow> = (0..pmf.weights().len() as u64)
                .map(|k| {
                    let p = pmf.probability(k);
                    PmfRow {
                        k,
                        numerator: p.numer().to_string(),
                        denominator: p.denom().to_string(),
                        value_decimal: rational_sci(&p, 17),
                    }
                })
                .collect();
            let bytes = match cli.format {
                Format::Json => json(&doc("pmf", PmfDoc { n: *n, rows }))?,
                Format::Csv => {
                    let mut buf = b"# roulette-lab pmf v1\n".to_vec();
                    {
                        let mut w = csv::Writer::from_writer(&mut buf);
                        w.write_record(["n", "k", "numerator", "denominator", "value_decimal"])?;
                        for r in rows {
                            w.write_record([
                                n.to_string(),
                                r.k.to_string(),
                                r.numerator,
                                r.denominator,
                                r.value_decimal,
                            ])?;
                        }
                        w.flush()?;
                    }
                    buf
                }
            };
            emit(cli, &bytes)?;
            Ok(true)
        }
        Command::Pseries(a) => {
            let s = load_series(cli, a)?;
            let bytes = match cli.format {
                Format::Json => json(&s.to_json())?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    s.write_csv(&mut buf)?;
                    buf
                }
            };
            emit(cli, &bytes)?;
            emit_svg(cli, || emit_plot(&s))?;
            Ok(true)
        }
        Command::Simulate { n, reps } => {
            let est = estimate_p(*n, *reps, cli.seed)?;
            let bytes = match cli.format {
                Format::Json => json(&doc(
                    "simulate",
                    SimulateDoc {
                        n: *n,
                        estimate: est,
                    },
                ))?,
                Format::Csv => {
                    let mut buf = b"# roulette-lab simulate v1\n".to_vec();
                    {
                        let mut w = csv::Writer::from_writer(&mut buf);
                        w.write_record(["n", "reps", "seed", "point", "stderr"])?;
                        w.write_record([
                            n.to_string(),
                            est.reps.to_string(),
                            est.seed.to_string(),
                            format_f64(est.point),
                            format_f64(est.stderr),
                        ])?;
                        w.flush()?;
                    }
                    buf
                }
            };
            emit(cli, &bytes)?;
            Ok(true)
        }
        Command::Clt { n, reps, centre } => {
            let policy = match centre {
                Centre::FiniteMean => CentrePolicy::FiniteMean,
                Centre::Limit => CentrePolicy::Limit,
            };
            let r: CltReport = clt_check(*n, *reps, cli.seed, policy)?;
            let bytes = match cli.format {
                Format::Json => json(&doc("clt", r.clone()))?,
                Format::Csv => flat_csv("clt", &r)?,
            };
            emit(cli, &bytes)?;
            Ok(r.pass())
        }
        Command::Mcdiarmid { n, reps, eps } => {
            let t: McDiarmidTable = mcdiarmid_check(*n, *reps, &parse_list(eps)?, cli.seed)?;
            let bytes = match cli.format {
                Format::Json => json(&doc("mcdiarmid", t.clone()))?,
                Format::Csv => {
                    let mut buf = format!(
                        "# roulette-lab mcdiarmid v1 n={} reps={} seed={} mean={}\n",
                        t.n,
                        t.reps,
                        t.seed,
                        format_f64(t.mean)
                    )
                    .into_bytes();
                    {
                        let mut w = csv::Writer::from_writer(&mut buf);
                        w.write_record(["epsilon", "empirical", "bound", "stderr", "flagged"])?;
                        for r in &t.rows {
                            w.write_record([
                                format_f64(r.epsilon),
                                format_f64(r.empirical),
                                format_f64(r.bound),
                                format_f64(r.stderr),
                                r.flagged.to_string(),
                            ])?;
                        }
                        w.flush()?;
                    }
                    buf
                }
            };
            emit(cli, &bytes)?;
            Ok(!t.any_flagged())
        }
        Command::Coupling { n, reps } => {
            let r: CouplingReport = coupling_check(*n, *reps, cli.seed)?;
            let bytes = match cli.format {
                Format::Json => json(&doc("coupling", r.clone()))?,
                Format::Csv => flat_csv("coupling", &r)?,
            };
            emit(cli, &bytes)?;
            Ok(r.pass())
        }
        Command::Waves { series, smoothing } => {
            let s = load_series(cli, series)?;
            let model: WaveModel = detect_waves(&s, *smoothing)?;
            let trace = wave_trace(&s, &model);
            let bytes = match cli.format {
                Format::Json => json(&doc("waves", model.clone()))?,
                Format::Csv => {
                    let mut buf = b"# roulette-lab waves-trace v1\n".to_vec();
                    write_trace_csv(&trace, &mut buf)?;
                    buf
                }
            };
            emit(cli, &bytes)?;
            emit_svg(cli, || emit_plot_with_trace(&s, &trace))?;
            Ok(true)
        }
        Command::Subseq {
            series,
            phi,
            tolerance,
        } => {
            let s = load_series(cli, series)?;
            let p: SubseqProbe = subsequence_probe(&s, *phi, *tolerance)?;
            let bytes = match cli.format {
                Format::Json => json(&doc("subseq", p.clone()))?,
                Format::Csv => {
                    let mut buf = format!(
                        "# roulette-lab subseq v1 phi={} tolerance={} dispersion={} full_dispersion={}\n",
                        p.phi,
                        p.tolerance,
                        format_f64(p.dispersion),
                        format_f64(p.full_dispersion)
                    )
                    .into_bytes();
                    {
                        let mut w = csv::Writer::from_writer(&mut buf);
                        w.write_record(["n", "p", "err"])?;
                        for q in &p.points {
                            w.write_record([q.n.to_string(), format_f64(q.p), format_f64(q.err)])?;
                        }
                        w.flush()?;
                    }
                    buf
                }
            };
            emit(cli, &bytes)?;
            Ok(true)
        }
        Command::Dcov { input, perms } => {
            let s = PairedSample::read_csv(std::fs::File::open(input)?)?;
            let d = DcovDoc {
                m: s.len(),
                dcov2: dcov2_vstat(&s)?,
                dcor: dcor(&s)?,
                perm_test: perm_test_dcor(&s, *perms, cli.seed)?,
            };
            let bytes = match cli.format {
                Format::Json => json(&doc("dcov", d))?,
                Format::Csv => flat_csv("dcov", &d)?,
            };
            emit(cli, &bytes)?;
            Ok(true)
        }
        Command::Introdemo {
            n,
            perms,
            bootstrap,
            sample_out,
        } => {
            let density = IntroDensity::default();
            let s = density.sample(*n, cli.seed)?;
            if let Some(path) = sample_out {
                let mut buf = Vec::new();
                s.write_csv(&mut buf)?;
                write_atomic(path, &buf)?;
            }
            let cov = cov_sym_abs_diff_bootstrap(&s, *bootstrap, cli.seed)?;
            let perm = perm_test_dcor(&s, *perms, cli.seed)?;
            let d = IntroDoc {
                m: *n,
                c: density.c,
                uncorrelated: cov.value.abs() <= 4.0 * cov.stderr,
                cov_sym_abs_diff: cov,
                dependent: perm.p_value < 0.01,
                perm_test: perm,
            };
            let ok = d.uncorrelated && d.dependent;
            let bytes = match cli.format {
                Format::Json => json(&doc("introdemo", d))?,
                Format::Csv => flat_csv("introdemo", &d)?,
            };
            emit(cli, &bytes)?;
            Ok(ok)
        }
        Command::Feq => {
            let checks = feq_suite()?;
            let ok = checks.iter().all(|c| c.pass);
            let bytes = match cli.format {
                Format::Json => json(&doc("feq", ChecksDoc { checks }))?,
                Format::Csv => checks_csv(&checks, "feq")?,
            };
            emit(cli, &bytes)?;
            Ok(ok)
        }
        Command::Charfn { y } => {
            let checks = charfn_suite(&parse_list(y)?, cli.seed)?;
            let ok = checks.iter().all(|c| c.pass);
            let bytes = match cli.format {
                Format::Json => json(&doc("charfn", ChecksDoc { checks }))?,
                Format::Csv => checks_csv(&checks, "charfn")?,
            };
            emit(cli, &bytes)?;
            Ok(ok)
        }
    }
}
