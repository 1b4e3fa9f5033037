//! Batch front end: `cz`, `spectrum`, `partition` and `sh` subcommands with
//! deterministic JSON, CSV or text output.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_VIOLATION`], [`EXIT_INCONCLUSIVE`],
//! [`EXIT_DISAGREE`], [`EXIT_USAGE`], [`EXIT_HYPOTHESIS`].

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cz::{cz_index, cz_rotation_analytic, CzError, HalfInteger, RotationPath, Tolerances};
use crate::ellipsoid::{CrossCheck, CrossCheckStatus, Ellipsoid, EllipsoidError, ReebOrbit};
use crate::field::{FieldContext, QuadIrrational};
use crate::sh::{compare, Comparison, DegreeVector, ShError};
use crate::tamura::{
    first_violation, rayleigh_conjugate, rayleigh_pair, uspensky_scan, PartitionError,
    PartitionReport, TamuraFamily,
};
use crate::weights::{WeightError, WeightTuple};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_DISAGREE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_HYPOTHESIS: i32 = 65;

#[derive(Debug, Parser)]
#[command(
    name = "tamura-sh",
    version,
    about = "Conley-Zehnder indices, ellipsoid spectra and Tamura partitions"
)]
pub struct Cli {
    /// Output format; CSV is available for `spectrum` and `sh` only.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Index of the rotation path ⊕ R(α_l t), t ∈ [0, T].
    Cz(CzArgs),
    /// Reeb orbits of ∂E(a_1, …, a_m) up to a degree.
    Spectrum(SpectrumArgs),
    /// Partition check for Tamura, Rayleigh-pair or naive Beatty families.
    Partition(PartitionArgs),
    /// Degree-wise comparison of orbit counting with the closed formula.
    Sh(ShArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ToleranceArgs {
    /// Kernel threshold for σ_min(Ψ − I).
    #[arg(long)]
    pub tol_kernel: Option<f64>,
    /// Ambiguity threshold for σ_min(Ψ − I).
    #[arg(long)]
    pub tol_accept: Option<f64>,
    /// Threshold below which a crossing-form eigenvalue counts as zero.
    #[arg(long)]
    pub tol_eigen: Option<f64>,
}

impl ToleranceArgs {
    fn resolve(&self) -> Result<Tolerances, String> {
        let mut t = Tolerances::default();
        for (name, value, slot) in [
            ("--tol-kernel", self.tol_kernel, &mut t.kernel),
            ("--tol-accept", self.tol_accept, &mut t.accept),
            ("--tol-eigen", self.tol_eigen, &mut t.eigen),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(format!("{name} must be positive, got {v}"));
                }
                *slot = v;
            }
        }
        if t.kernel >= t.accept {
            return Err(format!(
                "kernel tolerance {} must be below accept tolerance {}",
                t.kernel, t.accept
            ));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CzArgs {
    /// Comma-separated rotation speeds α_l.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub freqs: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub duration: f64,
    #[arg(long, conflicts_with_all = ["numeric", "both"])]
    pub analytic: bool,
    #[arg(long, conflicts_with = "both")]
    pub numeric: bool,
    /// Both engines and their agreement (the default).
    #[arg(long)]
    pub both: bool,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

#[derive(Debug, Clone, Args)]
pub struct WeightArgs {
    /// Radicand of the field Q(sqrt(d)).
    #[arg(long)]
    pub d: u64,
    /// Weights separated by ';', e.g. "1;sqrt(2);1+sqrt(2)".
    #[arg(long)]
    pub weights: String,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(i64).range(1..))]
    pub max_degree: i64,
    /// Recompute each index with the crossing-form engine.
    #[arg(long)]
    pub cross_check: bool,
    #[command(flatten)]
    pub tol: ToleranceArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionMode {
    Tamura,
    BeattyPair,
    Uspensky,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub limit: u64,
    /// `beatty-pair` takes a single weight α > 1.
    #[arg(long, value_enum, default_value_t = PartitionMode::Tamura)]
    pub mode: PartitionMode,
}

#[derive(Debug, Clone, Args)]
pub struct ShArgs {
    #[command(flatten)]
    pub weights: WeightArgs,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(i64).range(1..))]
    pub max_degree: i64,
}

struct Outcome {
    code: i32,
    body: String,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn hypothesis(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_HYPOTHESIS,
            message: message.into(),
        }
    }
}

impl From<WeightError> for Failure {
    fn from(e: WeightError) -> Self {
        match e {
            WeightError::HypothesisViolated(_) => Failure::hypothesis(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<EllipsoidError> for Failure {
    fn from(e: EllipsoidError) -> Self {
        match e {
            EllipsoidError::Weights(w) => w.into(),
            other => Failure::usage(other.to_string()),
        }
    }
}

impl From<PartitionError> for Failure {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Weights(w) => w.into(),
            PartitionError::RationalAlpha(_) | PartitionError::AlphaNotAboveOne(_) => {
                Failure::hypothesis(e.to_string())
            }
            other => Failure::usage(other.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let _ = out.write_all(o.body.as_bytes());
            o.code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Cz(a) => cmd_cz(a, cli.format),
        Command::Spectrum(a) => cmd_spectrum(a, cli.format),
        Command::Partition(a) => cmd_partition(a, cli.format),
        Command::Sh(a) => cmd_sh(a, cli.format),
    }
}

fn json_line(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn no_csv(format: Format, command: &str) -> Result<(), Failure> {
    if format == Format::Csv {
        return Err(Failure::usage(format!(
            "--format csv is not available for `{command}`"
        )));
    }
    Ok(())
}

fn half_json(h: HalfInteger) -> Value {
    serde_json::to_value(h).expect("half-integers serialize")
}

fn cmd_cz(a: &CzArgs, format: Format) -> Result<Outcome, Failure> {
    no_csv(format, "cz")?;
    let tol = a.tol.resolve().map_err(Failure::usage)?;
    let rotation = RotationPath::new(a.freqs.clone(), a.duration)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let want_analytic = !a.numeric;
    let want_numeric = !a.analytic;

    let analytic = want_analytic
        .then(|| cz_rotation_analytic(&a.freqs, a.duration).expect("validated rotation path"));
    let numeric: Option<Result<HalfInteger, CzError>> =
        want_numeric.then(|| cz_index(&rotation.to_path().with_tolerances(tol)));

    let mut report = serde_json::Map::new();
    if let Some(v) = analytic {
        report.insert("analytic".into(), half_json(v));
    }
    let mut code = EXIT_OK;
    match &numeric {
        Some(Ok(v)) => {
            report.insert("numeric".into(), half_json(*v));
            if let Some(an) = analytic {
                let agree = an == *v;
                report.insert("agree".into(), Value::Bool(agree));
                if !agree {
                    code = EXIT_DISAGREE;
                }
            }
        }
        Some(Err(e)) => {
            report.insert("numeric_error".into(), Value::String(e.to_string()));
            code = EXIT_INCONCLUSIVE;
        }
        None => {}
    }

    let body = match format {
        Format::Json => json_line(&Value::Object(report)),
        _ => {
            let mut s = String::new();
            for (k, v) in &report {
                let shown = match v {
                    Value::String(t) => t.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(s, "{k}: {shown}");
            }
            s
        }
    };
    Ok(Outcome { code, body })
}

fn parse_weights(w: &WeightArgs) -> Result<Vec<QuadIrrational>, Failure> {
    let ctx = FieldContext::new(w.d).map_err(|e| Failure::usage(format!("--d: {e}")))?;
    w.weights
        .split(';')
        .enumerate()
        .map(|(i, text)| {
            if text.trim().is_empty() {
                return Err(Failure::usage(format!("weight {} is empty", i + 1)));
            }
            ctx.parse(text)
                .map_err(|e| Failure::usage(format!("weight {} ({:?}): {e}", i + 1, text.trim())))
        })
        .collect()
}

fn parse_tuple(w: &WeightArgs) -> Result<WeightTuple, Failure> {
    Ok(WeightTuple::new(parse_weights(w)?)?)
}

fn hypothesis_ellipsoid(w: &WeightArgs) -> Result<Ellipsoid, Failure> {
    let tuple = parse_tuple(w)?;
    tuple.require_hypothesis()?;
    Ok(Ellipsoid::from_tuple(tuple))
}

fn orbit_json(o: &ReebOrbit, check: Option<&CrossCheck>) -> Value {
    let mut v = json!({
        "j": o.j,
        "n": o.n,
        "cz": o.cz,
        "period_coeff": o.period_coeff.to_string(),
    });
    if let Some(c) = check {
        let obj = v.as_object_mut().expect("object literal");
        obj.insert(
            "status".into(),
            serde_json::to_value(c.status).expect("enum serializes"),
        );
        obj.insert("numeric".into(), c.numeric.map_or(Value::Null, half_json));
        if let Some(e) = &c.error {
            obj.insert("numeric_error".into(), Value::String(e.clone()));
        }
    }
    v
}

fn status_name(s: CrossCheckStatus) -> &'static str {
    match s {
        CrossCheckStatus::Agree => "agree",
        CrossCheckStatus::Disagree => "disagree",
        CrossCheckStatus::Inconclusive => "inconclusive",
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_spectrum(a: &SpectrumArgs, format: Format) -> Result<Outcome, Failure> {
    let tol = a.tol.resolve().map_err(Failure::usage)?;
    let e = hypothesis_ellipsoid(&a.weights)?;
    let orbits = e.spectrum(a.max_degree)?;
    let checks: Option<Vec<CrossCheck>> = if a.cross_check {
        Some(
            orbits
                .iter()
                .map(|o| e.cross_check_index_with(o.j, o.n, tol))
                .collect::<Result<_, _>>()?,
        )
    } else {
        None
    };

    let code = match &checks {
        Some(cs) if cs.iter().any(|c| c.status == CrossCheckStatus::Disagree) => EXIT_DISAGREE,
        Some(cs)
            if cs
                .iter()
                .any(|c| c.status == CrossCheckStatus::Inconclusive) =>
        {
            EXIT_INCONCLUSIVE
        }
        _ => EXIT_OK,
    };
    let check_at = |i: usize| checks.as_ref().map(|cs| &cs[i]);

    let body = match format {
        Format::Json => json_line(&Value::Array(
            orbits
                .iter()
                .enumerate()
                .map(|(i, o)| orbit_json(o, check_at(i)))
                .collect(),
        )),
        Format::Csv => {
            let mut s = String::from("j,n,cz,period_coeff");
            if checks.is_some() {
                s.push_str(",numeric,status");
            }
            s.push('\n');
            for (i, o) in orbits.iter().enumerate() {
                let _ = write!(
                    s,
                    "{},{},{},{}",
                    o.j,
                    o.n,
                    o.cz,
                    csv_field(&o.period_coeff.to_string())
                );
                if let Some(c) = check_at(i) {
                    let numeric = c.numeric.map(|h| h.to_string()).unwrap_or_default();
                    let _ = write!(s, ",{},{}", numeric, status_name(c.status));
                }
                s.push('\n');
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (i, o) in orbits.iter().enumerate() {
                let _ = write!(
                    s,
                    "cz={:<4} j={} n={:<3} period=pi*({})",
                    o.cz, o.j, o.n, o.period_coeff
                );
                if let Some(c) = check_at(i) {
                    match (&c.numeric, &c.error) {
                        (Some(h), _) => {
                            let _ = write!(s, " numeric={h} {}", status_name(c.status));
                        }
                        (None, Some(err)) => {
                            let _ = write!(s, " inconclusive: {err}");
                        }
                        (None, None) => {}
                    }
                }
                s.push('\n');
            }
            s
        }
    };
    Ok(Outcome { code, body })
}

fn mode_name(m: PartitionMode) -> &'static str {
    match m {
        PartitionMode::Tamura => "tamura",
        PartitionMode::BeattyPair => "beatty-pair",
        PartitionMode::Uspensky => "uspensky",
    }
}

fn cmd_partition(a: &PartitionArgs, format: Format) -> Result<Outcome, Failure> {
    no_csv(format, "partition")?;
    let weights = parse_weights(&a.weights)?;
    let mut extra = serde_json::Map::new();
    let report: PartitionReport = match a.mode {
        PartitionMode::Tamura => TamuraFamily::new(weights)?.verify_partition(a.limit)?,
        PartitionMode::BeattyPair => {
            let [alpha]: [QuadIrrational; 1] = weights.try_into().map_err(|w: Vec<_>| {
                Failure::usage(format!(
                    "beatty-pair takes exactly one weight, got {}",
                    w.len()
                ))
            })?;
            let beta = rayleigh_conjugate(&alpha)?;
            extra.insert("alpha".into(), Value::String(alpha.to_string()));
            extra.insert("beta".into(), Value::String(beta.to_string()));
            rayleigh_pair(&alpha, a.limit)?
        }
        PartitionMode::Uspensky => {
            if weights.len() < 3 {
                return Err(Failure::usage(format!(
                    "uspensky needs at least 3 weights, got {}",
                    weights.len()
                )));
            }
            uspensky_scan(weights, a.limit)?
        }
    };
    let code = if report.is_partition() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    };

    let body = match format {
        Format::Json => {
            let mut v = serde_json::to_value(&report).expect("reports serialize");
            let obj = v.as_object_mut().expect("report is an object");
            obj.insert("mode".into(), Value::String(mode_name(a.mode).into()));
            obj.insert(
                "first_violation".into(),
                first_violation(&report).map_or(Value::Null, Value::from),
            );
            obj.extend(extra);
            json_line(&v)
        }
        _ => {
            let mut s = format!("mode: {}\nlimit: {}\n", mode_name(a.mode), report.bound);
            for (k, v) in &extra {
                let _ = writeln!(s, "{k}: {}", v.as_str().unwrap_or_default());
            }
            let counts: Vec<String> = report.counts.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "counts: {}", counts.join(" "));
            let _ = writeln!(s, "verdict: {}", verdict_text(&report));
            s
        }
    };
    Ok(Outcome { code, body })
}

fn verdict_text(report: &PartitionReport) -> String {
    use crate::tamura::Verdict;
    match &report.verdict {
        Verdict::Partition => "partition".into(),
        Verdict::Collision {
            value,
            first,
            second,
        } => format!(
            "collision at {value}: family {} (n={}) and family {} (n={})",
            first.j, first.n, second.j, second.n
        ),
        Verdict::Gap { value } => format!("gap at {value}"),
    }
}

fn degree_json(v: &DegreeVector) -> Value {
    Value::Array(v.iter().map(|(_, m)| Value::from(m)).collect())
}

fn cmd_sh(a: &ShArgs, format: Format) -> Result<Outcome, Failure> {
    let e = hypothesis_ellipsoid(&a.weights)?;
    let c: Comparison = match compare(&e, a.max_degree) {
        Ok(c) => c,
        Err(ShError::Ellipsoid(err)) => return Err(err.into()),
        Err(ShError::CountingHypotheses(report)) => {
            return Ok(Outcome {
                code: EXIT_VIOLATION,
                body: json_line(&json!({ "counting_hypotheses": report })),
            })
        }
    };
    let code = if c.equal() { EXIT_OK } else { EXIT_VIOLATION };

    let body = match format {
        Format::Json => json_line(&json!({
            "k_max": c.k_max,
            "equal": c.equal(),
            "first_difference": c.first_difference,
            "gutt": degree_json(&c.gutt),
            "formula": degree_json(&c.formula),
        })),
        Format::Csv => {
            let mut s = String::from("degree,gutt,formula\n");
            for ((k, g), (_, f)) in c.gutt.iter().zip(c.formula.iter()) {
                let _ = writeln!(s, "{k},{g},{f}");
            }
            s
        }
        Format::Text => {
            let mut s = format!("window: [0, {}]\n", c.k_max);
            let support = |v: &DegreeVector| {
                v.support()
                    .iter()
                    .map(i64::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(s, "orbit count support: {}", support(&c.gutt));
            let _ = writeln!(s, "formula support:     {}", support(&c.formula));
            match c.first_difference {
                None => s.push_str("verdict: equal\n"),
                Some(d) => {
                    let _ = writeln!(
                        s,
                        "verdict: first difference in degree {} (orbit count {}, formula {})",
                        d.degree, d.gutt, d.formula
                    );
                }
            }
            s
        }
    };
    Ok(Outcome { code, body })
}
