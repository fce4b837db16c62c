//! Command-line front end: `eval`, `verify <suite|all>`, `compare`.
//!
//! Everything is driven through [`run`], which returns the exit code and the
//! two output streams so the binary stays a thin shell and tests can call
//! the front end in-process.

use std::ffi::OsString;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::forms;
use crate::linalg::C64;
use crate::nullwert;
use crate::siegel::{self, RealCharacteristic, SiegelPoint};
use crate::theta::{self, TruncationPolicy};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const CSV_HEADER: [&str; 8] = ["x", "y", "w", "lhs", "rhs", "coeff_theta", "coeff_siegel", "ratio"];

/// Names accepted by `verify`, in the order `verify all` runs them.
pub const SUITES: [&str; 11] = [
    "addition",
    "orthogonality",
    "veronese",
    "transform",
    "descent",
    "heat",
    "parity-sign",
    "coeff-paths",
    "inverse-derivative",
    "splitting",
    "isometry",
];

const ALL_BUDGET: Duration = Duration::from_secs(120);

#[derive(Parser, Debug)]
#[command(
    name = "siegel-theta",
    version,
    about = "Second-order theta nullwerte on the Siegel upper half-space"
)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Genus (for `verify`: largest genus exercised).
    #[arg(long, global = true)]
    g: Option<usize>,

    /// Lower triangle of tau, row-major, as comma-separated `re+imi` entries.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tau: Option<String>,

    /// Absolute tail bound for every lattice sum.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,

    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Override the pass tolerance of a verification suite.
    #[arg(long, global = true, allow_hyphen_values = true)]
    threshold: Option<f64>,

    /// Report wall times in the output (makes it non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate theta values at a single point.
    Eval {
        #[arg(value_enum)]
        what: EvalKind,
        /// Characteristic `c1_1,...,c1_g,c2_1,...,c2_g` (decimals or fractions).
        #[arg(long = "char", allow_hyphen_values = true)]
        characteristic: Option<String>,
        /// Argument z as comma-separated `re+imi` entries (default 0).
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Run a verification suite, or `all`.
    Verify { suite: String },
    /// Genus-one comparison scan, or the structure difference for g >= 2.
    Compare {
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        y_min: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        y_max: f64,
        #[arg(long, default_value_t = 21)]
        nx: usize,
        #[arg(long, default_value_t = 21)]
        ny: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum EvalKind {
    Theta,
    Nullwert,
    Squared,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Result of one invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_PASS,
            stdout,
            stderr: String::new(),
        }
    }

    fn invalid(err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INVALID,
            stdout: String::new(),
            stderr: format!("error: {err}\n"),
        }
    }
}

/// A float printed with 17 significant digits; non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn text(self) -> String {
        if self.0.is_finite() {
            format!("{:.16e}", self.0)
        } else {
            String::new()
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            RawValue::from_string(self.text())
                .map_err(serde::ser::Error::custom)?
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct ComplexOut {
    re: Num,
    im: Num,
}

impl From<C64> for ComplexOut {
    fn from(z: C64) -> Self {
        Self {
            re: Num(z.re),
            im: Num(z.im),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub suite: String,
    pub cases: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub wall_time_s: f64,
    /// Whether `wall_time_s` is emitted; off by default for reproducible output.
    pub report_time: bool,
}

impl Serialize for SuiteResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SuiteResult", 6)?;
        st.serialize_field("suite", &self.suite)?;
        st.serialize_field("cases", &self.cases)?;
        st.serialize_field("max_residual", &Num(self.max_residual))?;
        st.serialize_field("tolerance", &Num(self.tolerance))?;
        st.serialize_field("pass", &self.pass)?;
        st.serialize_field("wall_time_s", &self.report_time.then_some(Num(self.wall_time_s)))?;
        st.end()
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            return if code == EXIT_PASS {
                Outcome::ok(text)
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let policy = match TruncationPolicy::with_tol(args.tol) {
        Ok(p) => p,
        Err(e) => return Outcome::invalid(e),
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return Outcome::invalid(e),
    };
    pool.install(|| match &args.command {
        Command::Eval {
            what,
            characteristic,
            z,
        } => cmd_eval(&args, *what, characteristic.as_deref(), z.as_deref(), &policy),
        Command::Verify { suite } => cmd_verify(&args, suite, &policy),
        Command::Compare {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        } => {
            let grid = Grid {
                x: (*x_min, *x_max, *nx),
                y: (*y_min, *y_max, *ny),
            };
            cmd_compare(&args, &grid, &policy)
        }
    })
}

// ---------------------------------------------------------------- parsing

/// Parses `a+bi`, `a-bi`, `bi`, `a` (exponents allowed in either part).
pub fn parse_complex(text: &str) -> Result<C64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidInput(format!("cannot parse complex number {text:?}"));
    let num = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(s.parse::<f64>().map_err(|_| bad())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(C64::new(body[..k].parse::<f64>().map_err(|_| bad())?, num(&body[k..])?)),
        None => Ok(C64::new(0.0, num(body)?)),
    }
}

fn parse_complex_list(text: &str) -> Result<Vec<C64>> {
    text.split(',').map(parse_complex).collect()
}

fn parse_real(text: &str) -> Result<f64> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("cannot parse real number {text:?}"));
    match t.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => t.parse().map_err(|_| bad()),
    }
}

/// Parses the `--tau` lower triangle; infers the genus when `--g` is absent.
pub fn parse_tau(text: &str, g: Option<usize>) -> Result<SiegelPoint> {
    let entries = parse_complex_list(text)?;
    let n = entries.len();
    let inferred = (1..=siegel::MAX_GENUS).find(|k| k * (k + 1) / 2 == n);
    let g = match (g, inferred) {
        (Some(g), _) if g * (g + 1) / 2 == n => g,
        (Some(g), _) => {
            return Err(Error::Dimension(format!(
                "genus {g} needs {} lower-triangle entries, got {n}",
                g * (g + 1) / 2
            )))
        }
        (None, Some(g)) => g,
        (None, None) => {
            return Err(Error::Dimension(format!(
                "{n} entries is not a triangular number <= 10"
            )))
        }
    };
    SiegelPoint::from_lower(g, entries)
}

fn required_tau(args: &Args) -> Result<SiegelPoint> {
    let text = args
        .tau
        .as_deref()
        .ok_or_else(|| Error::InvalidInput("--tau is required".into()))?;
    parse_tau(text, args.g)
}

// ---------------------------------------------------------------- output

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

// ---------------------------------------------------------------- eval

#[derive(Serialize)]
struct EvalValue {
    label: String,
    value: ComplexOut,
}

#[derive(Serialize)]
struct EvalReport {
    command: &'static str,
    genus: usize,
    radius: u32,
    values: Vec<EvalValue>,
}

fn cmd_eval(
    args: &Args,
    what: EvalKind,
    characteristic: Option<&str>,
    z: Option<&str>,
    policy: &TruncationPolicy,
) -> Outcome {
    match eval_report(args, what, characteristic, z, policy) {
        Ok(report) => Outcome::ok(match args.format.unwrap_or(Format::Json) {
            Format::Json => to_json(&report),
            Format::Csv => {
                let rows: Vec<Vec<String>> = report
                    .values
                    .iter()
                    .map(|v| {
                        vec![
                            v.label.clone(),
                            v.value.re.text(),
                            v.value.im.text(),
                            report.radius.to_string(),
                        ]
                    })
                    .collect();
                to_csv(&["label", "re", "im", "radius"], &rows)
            }
        }),
        Err(e) => Outcome::invalid(e),
    }
}

fn eval_report(
    args: &Args,
    what: EvalKind,
    characteristic: Option<&str>,
    z: Option<&str>,
    policy: &TruncationPolicy,
) -> Result<EvalReport> {
    let tau = required_tau(args)?;
    let g = tau.genus();
    let zero = vec![C64::new(0.0, 0.0); g];
    Ok(match what {
        EvalKind::Theta => {
            let ch = match characteristic {
                Some(text) => {
                    let v: Vec<f64> = text.split(',').map(parse_real).collect::<Result<_>>()?;
                    if v.len() != 2 * g {
                        return Err(Error::Dimension(format!(
                            "--char needs {} entries, got {}",
                            2 * g,
                            v.len()
                        )));
                    }
                    RealCharacteristic::new(v[..g].to_vec(), v[g..].to_vec())?
                }
                None => RealCharacteristic::zero(g),
            };
            let z = match z {
                Some(text) => parse_complex_list(text)?,
                None => zero,
            };
            if z.len() != g {
                return Err(Error::Dimension(format!("--z needs {g} entries, got {}", z.len())));
            }
            let value = theta::theta_char_eval(&ch, &z, &tau, policy)?;
            EvalReport {
                command: "theta",
                genus: g,
                radius: theta::theta_char_radius(&ch, &z, &tau, policy)?,
                values: vec![EvalValue {
                    label: format!("{:?};{:?}", ch.c1, ch.c2),
                    value: value.into(),
                }],
            }
        }
        EvalKind::Nullwert => {
            let us = nullwert::enumerate_u(g)?;
            let values = nullwert::theta_nullwert(&tau, policy)?;
            let mut radius = 0;
            for u in &us {
                radius = radius.max(theta::theta_second_order_radius(&u.half_vector(), &zero, &tau, policy)?);
            }
            EvalReport {
                command: "nullwert",
                genus: g,
                radius,
                values: us
                    .iter()
                    .zip(values)
                    .map(|(u, v)| EvalValue {
                        label: u.to_string(),
                        value: v.into(),
                    })
                    .collect(),
            }
        }
        EvalKind::Squared => {
            let es = nullwert::enumerate_e(g)?;
            let values = nullwert::theta_squared_map(&tau, policy)?;
            let mut radius = 0;
            for e in &es {
                radius = radius.max(theta::theta_char_radius(&e.to_real(), &zero, &tau, policy)?);
            }
            EvalReport {
                command: "squared",
                genus: g,
                radius,
                values: es
                    .iter()
                    .zip(values)
                    .map(|(e, v)| EvalValue {
                        label: e.to_string(),
                        value: v.into(),
                    })
                    .collect(),
            }
        }
    })
}

// ---------------------------------------------------------------- verify

/// Seed for the `k`-th random input of `suite` at genus `g`.
fn case_seed(seed: u64, suite: &str, g: usize, k: usize) -> u64 {
    let tag = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    });
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ tag ^ ((g as u64) << 32) ^ k as u64
}

fn random_point(seed: u64, suite: &str, g: usize, k: usize) -> Result<SiegelPoint> {
    siegel::random_siegel_point(g, case_seed(seed, suite, g, k))
}

fn random_z(rng: &mut ChaCha8Rng, g: usize, im_bound: f64) -> Vec<C64> {
    (0..g)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-im_bound..im_bound)))
        .collect()
}

/// Runs `f` on every case in parallel; the suite residual is the largest case residual.
fn max_over<T: Sync>(cases: &[T], f: impl Fn(&T) -> Result<f64> + Sync + Send) -> Result<(usize, f64)> {
    let residuals: Vec<f64> = cases.par_iter().map(f).collect::<Result<_>>()?;
    Ok((residuals.len(), residuals.into_iter().fold(0.0, f64::max)))
}

/// Random points per genus for the point-sampling suites.
fn points_per_genus(g: usize) -> usize {
    if g <= 3 {
        5
    } else {
        2
    }
}

fn point_cases(seed: u64, suite: &str, gs: impl Iterator<Item = usize>) -> Result<Vec<SiegelPoint>> {
    let mut out = Vec::new();
    for g in gs {
        for k in 0..points_per_genus(g) {
            out.push(random_point(seed, suite, g, k)?);
        }
    }
    Ok(out)
}

/// `(cases, max residual, default tolerance)` for a named suite.
pub fn run_suite(name: &str, g_max: usize, seed: u64, policy: &TruncationPolicy) -> Result<(usize, f64, f64)> {
    siegel::check_genus(g_max)?;
    let p = *policy;
    match name {
        "addition" => {
            let mut cases = Vec::new();
            for g in 1..=g_max {
                let count = [5, 5, 2, 1][g - 1];
                for k in 0..count {
                    cases.push(random_point(seed, name, g, k)?);
                }
            }
            let tol = [1e-8, 1e-8, 1e-7, 1e-6][g_max - 1];
            let (n, r) = max_over(&cases, |tau| Ok(nullwert::verify_lfs(tau, &p)?.residual))?;
            Ok((n, r, tol))
        }
        "orthogonality" => {
            let gs: Vec<usize> = (1..=g_max).collect();
            let (n, r) = max_over(&gs, |&g| Ok(nullwert::addition_matrix(g)?.orthogonality_defect()))?;
            Ok((n, r, 0.0))
        }
        "veronese" => {
            let mut cases = Vec::new();
            for g in 1..=g_max {
                let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, name, g, 0));
                for _ in 0..5 {
                    cases.push(random_z(&mut rng, 1 << g, 1.0));
                }
                for k in 0..2 {
                    cases.push(nullwert::theta_nullwert(&random_point(seed, name, g, k)?, &p)?);
                }
            }
            let (n, r) = max_over(&cases, |lambda| {
                let n2: f64 = lambda.iter().map(|z| z.norm_sqr()).sum();
                let v2: f64 = nullwert::veronese_v2(lambda).iter().map(|z| z.norm_sqr()).sum();
                Ok((v2 - n2 * n2).abs() / (n2 * n2))
            })?;
            Ok((n, r, 1e-12))
        }
        "transform" | "descent" => {
            let mut cases = Vec::new();
            for tau in point_cases(seed, name, 1..=g_max)? {
                for m in siegel::standard_generators(tau.genus())? {
                    cases.push((m, tau.clone()));
                }
            }
            let (n, r) = max_over(&cases, |(m, tau)| {
                if name == "transform" {
                    Ok(nullwert::modulus_law_residual(m, tau, &p)?.max(nullwert::t_modulus_residual(m, tau, &p)?))
                } else {
                    nullwert::descent_residual(m, tau, &p)
                }
            })?;
            Ok((n, r, 1e-8))
        }
        "heat" => {
            let mut cases = Vec::new();
            for (k, tau) in point_cases(seed, name, 1..=g_max)?.into_iter().enumerate() {
                let g = tau.genus();
                let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, name, g, 100 + k));
                let zs = [vec![C64::new(0.0, 0.0); g], random_z(&mut rng, g, 0.5)];
                for u in nullwert::enumerate_u(g)? {
                    for z in &zs {
                        cases.push((u.half_vector(), z.clone(), tau.clone()));
                    }
                }
            }
            let (n, r) = max_over(&cases, |(u, z, tau)| {
                Ok(theta::heat_residual(&theta::theta_second_order_jet(u, z, tau, &p)?))
            })?;
            Ok((n, r, 1e-9))
        }
        "parity-sign" => {
            let mut cases = Vec::new();
            for (k, tau) in point_cases(seed, name, 1..=g_max)?.into_iter().enumerate() {
                let g = tau.genus();
                let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, name, g, 100 + k));
                for _ in 0..4 {
                    let m1: Vec<i64> = (0..g).map(|_| rng.gen_range(0..2)).collect();
                    let m2: Vec<i64> = (0..g).map(|_| rng.gen_range(0..2)).collect();
                    let k1: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
                    let k2: Vec<i64> = (0..g).map(|_| rng.gen_range(-2..=2)).collect();
                    let z = random_z(&mut rng, g, 0.5);
                    cases.push((m1, m2, k1, k2, z, tau.clone()));
                }
            }
            let (n, r) = max_over(&cases, |(m1, m2, k1, k2, z, tau)| {
                parity_sign_residual(m1, m2, k1, k2, z, tau, &p)
            })?;
            Ok((n, r, 1e-10))
        }
        "coeff-paths" => {
            let cases = point_cases(seed, name, 1..=g_max)?;
            let (n, r) = max_over(&cases, |tau| {
                let a = forms::sigma_coefficients(tau, &p)?;
                let b = forms::sigma_coefficients_heat(tau, &p)?;
                let mut worst: f64 = 0.0;
                for i in 0..tau.genus() {
                    for j in 0..=i {
                        worst = worst.max((a.get(i, j) - b.get(i, j)).norm() / a.get(i, j).norm().max(1.0));
                    }
                }
                Ok(worst)
            })?;
            Ok((n, r, 1e-9))
        }
        "inverse-derivative" => {
            let mut cases = Vec::new();
            for tau in point_cases(seed, name, 1..=g_max)? {
                for u in 0..tau.genus() {
                    for v in 0..=u {
                        cases.push((tau.clone(), u, v));
                    }
                }
            }
            let (n, r) = max_over(&cases, |(tau, u, v)| {
                let a = forms::inverse_im_derivative(tau, *u, *v);
                let f = forms::inverse_im_derivative_fd(tau, *u, *v, 1e-5)?;
                Ok(a.max_abs_diff(&f) / a.max_abs().max(f64::MIN_POSITIVE))
            })?;
            Ok((n, r, 1e-6))
        }
        "splitting" | "isometry" => {
            let mut cases = Vec::new();
            for g in 2..=g_max.max(2) {
                for k in 0..points_per_genus(g) {
                    let z = random_point(seed, name, 1, 1000 + k)?.get(0, 0);
                    let z = C64::new(z.re, z.im);
                    cases.push((z, random_point(seed, name, g - 1, k)?));
                }
            }
            let (n, r) = max_over(&cases, |(z, tp)| {
                if name == "splitting" {
                    forms::splitting_residual(*z, tp, &p)
                } else {
                    let rep = forms::iota_pullback_check(*z, tp, &p)?;
                    Ok(rep.theta_residual.max(rep.siegel_residual))
                }
            })?;
            Ok((n, r, if name == "splitting" { 1e-10 } else { 1e-6 }))
        }
        other => Err(Error::InvalidInput(format!("unknown suite {other:?}"))),
    }
}

/// Relative residuals of the sign rule under integer shifts and of the parity
/// in `z` for the half-integer characteristic `(m1/2, m2/2)`.
fn parity_sign_residual(
    m1: &[i64],
    m2: &[i64],
    k1: &[i64],
    k2: &[i64],
    z: &[C64],
    tau: &SiegelPoint,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let base = RealCharacteristic::half_integer(m1, m2);
    let shifted = RealCharacteristic::half_integer(
        &m1.iter().zip(k1).map(|(m, k)| m + 2 * k).collect::<Vec<_>>(),
        &m2.iter().zip(k2).map(|(m, k)| m + 2 * k).collect::<Vec<_>>(),
    );
    let dot = |a: &[i64], b: &[i64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<i64>();
    let sign = |e: i64| if e.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let value = theta::theta_char_eval(&base, z, tau, policy)?;
    let rel = |a: C64, b: C64| {
        let scale = a.norm().max(b.norm());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).norm() / scale
        }
    };
    let sign_rule = rel(
        theta::theta_char_eval(&shifted, z, tau, policy)?,
        value * sign(dot(m1, k2)),
    );
    let minus_z: Vec<C64> = z.iter().map(|v| -v).collect();
    let parity = rel(
        theta::theta_char_eval(&base, &minus_z, tau, policy)?,
        value * sign(dot(m1, m2)),
    );
    Ok(sign_rule.max(parity))
}

fn suite_result(name: &str, args: &Args, policy: &TruncationPolicy, g_max: usize) -> (SuiteResult, Option<String>) {
    let start = Instant::now();
    let outcome = run_suite(name, g_max, args.seed, policy);
    let wall = start.elapsed().as_secs_f64();
    let (cases, residual, tolerance, diag) = match outcome {
        Ok((n, r, t)) => (n, r, args.threshold.unwrap_or(t), None),
        Err(e) => (
            0,
            f64::INFINITY,
            args.threshold.unwrap_or(0.0),
            Some(format!("suite {name}: {e}")),
        ),
    };
    (
        SuiteResult {
            suite: name.to_string(),
            cases,
            max_residual: residual,
            tolerance,
            pass: residual <= tolerance,
            wall_time_s: wall,
            report_time: args.timing,
        },
        diag,
    )
}

fn cmd_verify(args: &Args, suite: &str, policy: &TruncationPolicy) -> Outcome {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Outcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!(
                "error: unknown suite {suite:?}; expected one of: all, {}\n",
                SUITES.join(", ")
            ),
        };
    };
    let g_max = args.g.unwrap_or(3);
    if let Err(e) = siegel::check_genus(g_max) {
        return Outcome::invalid(e);
    }
    let start = Instant::now();
    let mut results = Vec::new();
    let mut stderr = String::new();
    for name in names {
        let (r, diag) = suite_result(name, args, policy, g_max);
        if let Some(d) = diag {
            stderr.push_str(&format!("error: {d}\n"));
        }
        stderr.push_str(&format!(
            "{} {:<18} cases={:<4} max_residual={:.3e} tolerance={:.1e} time={:.2}s\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.suite,
            r.cases,
            r.max_residual,
            r.tolerance,
            r.wall_time_s
        ));
        results.push(r);
    }
    let mut all_pass = results.iter().all(|r| r.pass);
    if suite == "all" && g_max <= 3 && start.elapsed() > ALL_BUDGET {
        stderr.push_str(&format!(
            "FAIL time budget: {:.1}s > {}s\n",
            start.elapsed().as_secs_f64(),
            ALL_BUDGET.as_secs()
        ));
        all_pass = false;
    }
    let stdout = match args.format.unwrap_or(Format::Json) {
        Format::Json if suite == "all" => to_json(&results),
        Format::Json => to_json(&results[0]),
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|r| {
                    vec![
                        r.suite.clone(),
                        r.cases.to_string(),
                        Num(r.max_residual).text(),
                        Num(r.tolerance).text(),
                        r.pass.to_string(),
                        if r.report_time {
                            Num(r.wall_time_s).text()
                        } else {
                            String::new()
                        },
                    ]
                })
                .collect();
            to_csv(
                &["suite", "cases", "max_residual", "tolerance", "pass", "wall_time_s"],
                &rows,
            )
        }
    };
    Outcome {
        code: if all_pass { EXIT_PASS } else { EXIT_FAIL },
        stdout,
        stderr,
    }
}

// ---------------------------------------------------------------- compare

struct Grid {
    x: (f64, f64, usize),
    y: (f64, f64, usize),
}

fn axis((lo, hi, n): (f64, f64, usize)) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn check_strip(x: f64, y: f64) -> Result<()> {
    if !(x.abs() <= 0.5) || !(y > 0.1) || !y.is_finite() {
        return Err(Error::ArgumentOutOfRange(if x.abs() > 0.5 || x.is_nan() {
            x
        } else {
            y
        }));
    }
    Ok(())
}

#[derive(Serialize)]
struct RecordOut {
    x: Num,
    y: Num,
    w: Num,
    lhs: Num,
    rhs: Num,
    coeff_theta: Num,
    coeff_siegel: Num,
    ratio: Num,
}

impl RecordOut {
    fn new(r: &forms::Genus1Record) -> Self {
        Self {
            x: Num(r.x),
            y: Num(r.y),
            w: Num(r.w),
            lhs: Num(r.lhs),
            rhs: Num(r.rhs),
            coeff_theta: Num(r.coeff_theta),
            coeff_siegel: Num(r.coeff_siegel),
            ratio: Num(r.ratio),
        }
    }

    fn row(&self) -> Vec<String> {
        [
            self.x,
            self.y,
            self.w,
            self.lhs,
            self.rhs,
            self.coeff_theta,
            self.coeff_siegel,
            self.ratio,
        ]
        .iter()
        .map(|n| n.text())
        .collect()
    }
}

#[derive(Serialize)]
struct DifferenceOut {
    genus: usize,
    structure_difference: Vec<Vec<ComplexOut>>,
}

fn cmd_compare(args: &Args, grid: &Grid, policy: &TruncationPolicy) -> Outcome {
    let g = args.g.unwrap_or(1);
    if g >= 2 || args.tau.as_deref().is_some_and(|t| t.contains(',')) {
        return match compare_difference(args, policy) {
            Ok(out) => Outcome::ok(out),
            Err(e) => Outcome::invalid(e),
        };
    }
    let points: Vec<(f64, f64)> = match &args.tau {
        Some(t) => match parse_complex(t) {
            Ok(z) => vec![(z.re, z.im)],
            Err(e) => return Outcome::invalid(e),
        },
        None => {
            if grid.x.0 > grid.x.1 || grid.y.0 > grid.y.1 || grid.x.2 == 0 || grid.y.2 == 0 {
                return Outcome::invalid("empty grid");
            }
            // Row-major in y, then x.
            let xs = axis(grid.x);
            axis(grid.y)
                .into_iter()
                .flat_map(|y| xs.iter().map(move |&x| (x, y)))
                .collect()
        }
    };
    for &(x, y) in &points {
        if let Err(e) = check_strip(x, y) {
            return Outcome::invalid(format!("{e}: the scan is limited to |x| <= 1/2, y > 0.1"));
        }
    }
    let records: Result<Vec<forms::Genus1Record>> = points
        .par_iter()
        .map(|&(x, y)| forms::genus1_record(C64::new(x, y), policy))
        .collect();
    let records = match records {
        Ok(r) => r,
        Err(e) => return Outcome::invalid(e),
    };
    let rows: Vec<RecordOut> = records.iter().map(RecordOut::new).collect();
    Outcome::ok(match args.format.unwrap_or(Format::Csv) {
        Format::Csv => to_csv(&CSV_HEADER, &rows.iter().map(RecordOut::row).collect::<Vec<_>>()),
        Format::Json => to_json(&rows),
    })
}

fn compare_difference(args: &Args, policy: &TruncationPolicy) -> Result<String> {
    let tau = required_tau(args)?;
    let g = tau.genus();
    let d = forms::structure_difference(&tau, policy)?;
    let matrix: Vec<Vec<ComplexOut>> = (0..g).map(|i| (0..g).map(|j| d.get(i, j).into()).collect()).collect();
    Ok(match args.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&DifferenceOut {
            genus: g,
            structure_difference: matrix,
        }),
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..g)
                .flat_map(|i| (0..g).map(move |j| (i, j)))
                .map(|(i, j)| {
                    vec![
                        i.to_string(),
                        j.to_string(),
                        matrix[i][j].re.text(),
                        matrix[i][j].im.text(),
                    ]
                })
                .collect();
            to_csv(&["i", "j", "re", "im"], &rows)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Outcome {
        run(std::iter::once("siegel-theta").chain(args.iter().copied()))
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0+1i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("0-1i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("-0.5+2i").unwrap(), C64::new(-0.5, 2.0));
        assert_eq!(parse_complex("1e-3-2.5e1i").unwrap(), C64::new(1e-3, -25.0));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("3").unwrap(), C64::new(3.0, 0.0));
        assert!(parse_complex("x+yi").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn tau_parsing_infers_genus() {
        assert_eq!(
            parse_tau("0+1i,0+0i,0+1i", None).unwrap(),
            SiegelPoint::scaled_identity(2, 1.0).unwrap()
        );
        assert!(parse_tau("0+1i,0+0i", None).is_err());
        assert!(parse_tau("0+1i", Some(2)).is_err());
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(Num(1.0).text(), "1.0000000000000000e0");
        assert_eq!(serde_json::to_string(&Num(f64::NAN)).unwrap(), "null");
        let back: f64 = Num(0.1 + 0.2).text().parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn eval_theta_at_i() {
        let out = run_args(&["eval", "theta", "--g", "1", "--tau", "0+1i", "--char", "0,0"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        let re = v["values"][0]["value"]["re"].as_f64().unwrap();
        assert!((re - 1.08643481).abs() < 1e-7);
        assert!(v["radius"].as_u64().unwrap() >= 1);
    }

    #[test]
    fn eval_nullwert_and_squared() {
        let out = run_args(&["eval", "nullwert", "--g", "1", "--tau", "0+1i"]);
        assert_eq!(out.code, 0);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["values"].as_array().unwrap().len(), 2);
        let out = run_args(&["eval", "squared", "--tau", "0+1i,0+0i,0+1i", "--format", "csv"]);
        assert_eq!(out.code, 0);
        assert_eq!(out.stdout.lines().count(), 1 + 10);
    }

    #[test]
    fn eval_rejects_lower_half_plane() {
        assert_eq!(
            run_args(&["eval", "theta", "--g", "1", "--tau", "0-1i", "--char", "0,0"]).code,
            EXIT_INVALID
        );
        assert_eq!(run_args(&["eval", "theta", "--tau", "nonsense"]).code, EXIT_INVALID);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_args(&["verify", "no-such-suite"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["frobnicate"]).code, EXIT_USAGE);
        assert_eq!(run_args(&["--help"]).code, EXIT_PASS);
    }

    #[test]
    fn verify_orthogonality_is_exact() {
        let out = run_args(&["verify", "orthogonality", "--g", "3"]);
        assert_eq!(out.code, 0);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(v["max_residual"].as_f64().unwrap(), 0.0);
        assert_eq!(v["pass"], true);
        assert!(v["wall_time_s"].is_null());
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn threshold_can_force_failure() {
        let out = run_args(&["verify", "veronese", "--g", "1", "--threshold", "-1"]);
        assert_eq!(out.code, EXIT_FAIL);
    }

    #[test]
    fn timing_flag_reports_time() {
        let out = run_args(&["verify", "orthogonality", "--g", "1", "--timing"]);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        assert!(v["wall_time_s"].as_f64().is_some());
    }

    #[test]
    fn compare_single_point() {
        let out = run_args(&["compare", "--g", "1", "--tau", "0+1i"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let mut lines = out.stdout.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert!((row[7] - 2.3947).abs() < 5e-3);
    }

    #[test]
    fn compare_grid_shape_and_strip() {
        let out = run_args(&["compare", "--nx", "3", "--ny", "2", "--threads", "2"]);
        assert_eq!(out.code, 0);
        assert_eq!(out.stdout.lines().count(), 7);
        assert_eq!(run_args(&["compare", "--y-min", "0.05"]).code, EXIT_INVALID);
        assert_eq!(run_args(&["compare", "--x-max", "0.7"]).code, EXIT_INVALID);
    }

    #[test]
    fn compare_higher_genus() {
        let out = run_args(&["compare", "--g", "2", "--tau", "0+2i,0+0i,0+1i"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
        let d = &v["structure_difference"];
        let one = run_args(&["compare", "--g", "1", "--tau", "0+2i", "--format", "json"]);
        assert_eq!(one.code, 0);
        let g1 = forms::structure_difference(
            &SiegelPoint::genus1(C64::new(0.0, 2.0)).unwrap(),
            &TruncationPolicy::default(),
        )
        .unwrap();
        assert!((d[0][0]["re"].as_f64().unwrap() - g1.get(0, 0).re).abs() < 1e-8);
        assert!((d[0][0]["im"].as_f64().unwrap() - g1.get(0, 0).im).abs() < 1e-8);
    }
}
