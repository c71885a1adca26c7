//! The `brjuno` command line: argument parsing, run configuration and the
//! JSON/CSV writers. [`run`] is the whole program minus process setup.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::acceptance::{self, CriterionReport, Tolerances};
use crate::brjuno::{eval_b_with, eval_btilde, functional_equation_parts};
use crate::cf::{convergents, diophantine_profile, Availability};
use crate::error::Error;
use crate::num::Precision;
use crate::regularity::{estimate_p_exponent, ExponentEstimate};
use crate::xspec::{self, XSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Exit code of a selftest with failing criteria.
pub const EXIT_CRITERIA_FAILED: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "brjuno", version, about = "Brjuno function evaluation and regularity experiments")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Continued-fraction table: quotients, convergents, τₙ and ln βₙ.
    Cf(CfArgs),
    /// Brjuno function value with certified tail bound.
    Brjuno(BrjunoArgs),
    /// p-exponent regression over dyadic scales.
    Pexp(PexpArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
    /// Re-run a saved run configuration.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct CfArgs {
    /// Number spec: golden | silver | p/q | per:[a,…;b,…] | tau:<real> | rand:<seed>:<depth>
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = 10)]
    depth: usize,
}

#[derive(Debug, Args)]
struct BrjunoArgs {
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct PexpArgs {
    #[arg(long)]
    x: String,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 8)]
    jmin: i32,
    #[arg(long, default_value_t = 18)]
    jmax: i32,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Comma-separated criterion numbers; all when absent.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// A JSON run configuration, or a full output object carrying one.
    #[arg(long)]
    config: PathBuf,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jmin: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jmax: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<usize>>,
    /// Seed of a `rand:` spec, repeated here for visibility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_scale: Option<f64>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    fn new(command: &str, format: Format, output: &Option<PathBuf>) -> Self {
        RunConfig {
            command: command.into(),
            x: None,
            depth: None,
            tol: None,
            p: None,
            jmin: None,
            jmax: None,
            criteria: None,
            seed: None,
            precision: Precision::Double,
            tol_scale: None,
            format,
            output: output.as_ref().map(|p| p.display().to_string()),
        }
    }

    fn with_x(mut self, x: &str) -> Self {
        self.seed = x
            .trim()
            .strip_prefix("rand:")
            .and_then(|r| r.split(':').next())
            .and_then(|s| s.trim().parse().ok());
        self.x = Some(x.to_string());
        self
    }
}

#[derive(Debug, Clone, Serialize)]
struct ErrorEntry {
    kind: &'static str,
    message: String,
    exit_code: i32,
}

impl From<&Error> for ErrorEntry {
    fn from(e: &Error) -> Self {
        let kind = match e {
            Error::Domain(_) => "domain",
            Error::RationalInput(_) => "rational_input",
            Error::Exhausted { .. } => "exhausted",
            Error::Resource { .. } => "resource",
            Error::Estimation(_) => "estimation",
            Error::Parse(_) => "parse",
        };
        ErrorEntry {
            kind,
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

/// Output of one command before serialization.
struct Outcome {
    results: Value,
    errors: Vec<ErrorEntry>,
    /// Rows for the CSV writer: header then records.
    csv: Option<(Vec<String>, Vec<Vec<String>>)>,
    /// Lines for stderr.
    notes: Vec<String>,
    code: i32,
}

impl Outcome {
    fn failed(e: Error) -> Self {
        let results = match &e {
            Error::Resource { partial: Some(p), .. } => json!({ "partial": p }),
            _ => Value::Null,
        };
        Outcome {
            results,
            code: e.exit_code(),
            errors: vec![ErrorEntry::from(&e)],
            csv: None,
            notes: vec![],
        }
    }
}

/// Runs the program on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err((msg, code)) => {
            let _ = writeln!(stderr, "error: {msg}");
            return code;
        }
    };
    execute(&config, stdout, stderr)
}

fn build_config(cli: &Cli) -> std::result::Result<RunConfig, (String, i32)> {
    let precision = Precision::from_env().map_err(|m| (m, 2))?;
    let mut cfg = match &cli.command {
        Command::Cf(a) => {
            let mut c = RunConfig::new("cf", cli.format, &cli.output).with_x(&a.x);
            c.depth = Some(a.depth);
            c
        }
        Command::Brjuno(a) => {
            let mut c = RunConfig::new("brjuno", cli.format, &cli.output).with_x(&a.x);
            c.tol = Some(a.tol);
            c
        }
        Command::Pexp(a) => {
            let mut c = RunConfig::new("pexp", cli.format, &cli.output).with_x(&a.x);
            c.p = Some(a.p);
            c.jmin = Some(a.jmin);
            c.jmax = Some(a.jmax);
            c
        }
        Command::Selftest(a) => {
            let mut c = RunConfig::new("selftest", cli.format, &cli.output);
            c.criteria = a.criteria.clone();
            c.tol_scale = Some(Tolerances::from_env().map_err(|m| (m, 2))?.scale);
            c
        }
        Command::Replay(a) => {
            let text = std::fs::read_to_string(&a.config)
                .map_err(|e| (format!("cannot read {}: {e}", a.config.display()), 2))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| (format!("invalid JSON: {e}"), 2))?;
            let body = v.get("config").cloned().unwrap_or(v);
            let c: RunConfig = serde_json::from_value(body).map_err(|e| (format!("invalid run config: {e}"), 2))?;
            if c.command == "replay" {
                return Err(("a replay config cannot replay itself".into(), 2));
            }
            return Ok(c);
        }
    };
    cfg.precision = precision;
    Ok(cfg)
}

/// Executes a run configuration, writing its output.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match cfg.command.as_str() {
        "cf" => cmd_cf(cfg),
        "brjuno" => cmd_brjuno(cfg),
        "pexp" => cmd_pexp(cfg),
        "selftest" => cmd_selftest(cfg, stderr),
        other => Outcome::failed(Error::Parse(format!("unknown command {other:?}"))),
    };
    for n in &outcome.notes {
        let _ = writeln!(stderr, "{n}");
    }
    let body = match (cfg.format, &outcome.csv) {
        (Format::Csv, Some((header, rows))) => match csv_text(header, rows) {
            Ok(t) => t,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return 2;
            }
        },
        _ => {
            let doc = json!({
                "config": cfg,
                "results": outcome.results,
                "errors": outcome.errors,
                "version": VERSION,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("output serializes");
            s.push('\n');
            s
        }
    };
    if cfg.format == Format::Csv {
        if outcome.csv.is_none() || !outcome.errors.is_empty() {
            for e in &outcome.errors {
                let _ = writeln!(stderr, "error: {}", e.message);
            }
        }
        if cfg.command == "pexp" && outcome.code == 0 {
            let summary = outcome.results.get("summary").cloned().unwrap_or(Value::Null);
            let _ = writeln!(stderr, "{summary}");
        }
    }
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, &body).map_err(|e| e.to_string()),
        None => stdout.write_all(body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return 2;
    }
    outcome.code
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> std::result::Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn parse_x(cfg: &RunConfig) -> Result<XSpec, Error> {
    let x = cfg.x.as_deref().ok_or_else(|| Error::Parse("missing --x".into()))?;
    xspec::parse(x)
}

/// A float with a bound on its rounding error.
fn rounded(v: f64) -> Value {
    if v.is_finite() {
        json!({ "value": v, "rounding_bound": 1e-14 * v.abs().max(1.0) })
    } else {
        Value::Null
    }
}

fn opt_str(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn cmd_cf(cfg: &RunConfig) -> Outcome {
    match cf_table(cfg) {
        Ok(o) => o,
        Err(e) => Outcome::failed(e),
    }
}

fn cf_table(cfg: &RunConfig) -> Result<Outcome, Error> {
    let spec = parse_x(cfg)?;
    let depth = cfg.depth.unwrap_or(10);
    if depth == 0 {
        return Err(Error::domain("depth must be positive"));
    }
    let x = &spec.number;
    let cv = convergents(x, depth)?;
    let rows_n = cv.last_index().max(0) as usize;
    // τₙ and βₙ need qₙ₊₁ and vanish at the last quotient of a rational
    let prof_depth = match x.availability() {
        Availability::Infinite => rows_n,
        Availability::Terminates(n) | Availability::Limited(n) => rows_n.min(n.saturating_sub(1)),
    };
    let prof = if prof_depth >= 1 {
        Some(diophantine_profile(x, prof_depth)?)
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for n in 1..=rows_n {
        let c = cv.get(n as i64);
        let a = x.quotient(n)?.expect("quotient below the convergent depth");
        let (tau, lb) = match &prof {
            Some(p) if n <= p.ns.len() => (p.taus[n - 1], p.betas[n - 1]),
            _ => (f64::NAN, f64::NAN),
        };
        rows.push(json!({
            "n": n,
            "a": a.to_string(),
            "p": c.p.to_string(),
            "q": c.q.to_string(),
            "tau": rounded(tau),
            "log_beta": rounded(lb),
        }));
        csv_rows.push(vec![
            n.to_string(),
            a.to_string(),
            c.p.to_string(),
            c.q.to_string(),
            opt_str(tau),
            opt_str(lb),
        ]);
    }
    let mut notes = Vec::new();
    if !spec.integer_part.is_zero_int() {
        notes.push(format!("note: integer part {} split off", spec.integer_part));
    }
    if rows_n < depth {
        notes.push(format!("note: expansion ends at depth {rows_n}"));
    }
    let results = json!({
        "label": x.label(),
        "kind": x.kind(),
        "integer_part": spec.integer_part.to_string(),
        "terminated": cv.terminated,
        "tau_estimate": prof.as_ref().map(|p| rounded(p.tau_estimate)),
        "rows": rows,
    });
    let header = ["n", "a_n", "p_n", "q_n", "tau_n", "log_beta_n"].map(String::from).to_vec();
    Ok(Outcome {
        results,
        errors: vec![],
        csv: Some((header, csv_rows)),
        notes,
        code: 0,
    })
}

trait IsZeroInt {
    fn is_zero_int(&self) -> bool;
}

impl IsZeroInt for num_bigint::BigInt {
    fn is_zero_int(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
}

fn cmd_brjuno(cfg: &RunConfig) -> Outcome {
    match brjuno_value(cfg) {
        Ok(o) => o,
        Err(e) => Outcome::failed(e),
    }
}

fn brjuno_value(cfg: &RunConfig) -> Result<Outcome, Error> {
    let spec = parse_x(cfg)?;
    let tol = cfg.tol.unwrap_or(1e-9);
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tol must be positive, got {tol}")));
    }
    let x = &spec.number;
    let (results, row) = if let Some(r) = x.as_rational() {
        let v = eval_btilde(&r)?;
        let n_terms = x.depth_available().unwrap_or(1) as f64;
        let bound = 4.0 * n_terms * f64::EPSILON * v.abs().max(1.0);
        let results = json!({
            "label": x.label(),
            "method": "btilde",
            "value": v,
            "rounding_bound": bound,
        });
        (results, vec![x.label(), "btilde".into(), format!("{v}"), format!("{bound:e}"), String::new(), String::new()])
    } else {
        let eval = eval_b_with(x, tol, cfg.precision, false)?;
        let fe = match functional_equation_parts(x, tol) {
            Ok(f) => json!({ "residual": f.residual, "bound": 2.0 * tol, "within_bound": f.residual <= 2.0 * tol }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        let results = json!({
            "label": x.label(),
            "method": "series",
            "value": eval.value,
            "tail_bound": eval.tail_bound,
            "depth": eval.depth,
            "precision": eval.precision,
            "functional_equation": fe,
        });
        let resid = fe.get("residual").and_then(Value::as_f64).map(|r| format!("{r:e}")).unwrap_or_default();
        (
            results,
            vec![
                x.label(),
                "series".into(),
                format!("{}", eval.value),
                format!("{:e}", eval.tail_bound),
                eval.depth.to_string(),
                resid,
            ],
        )
    };
    let header = ["x", "method", "value", "error_bound", "depth", "functional_residual"]
        .map(String::from)
        .to_vec();
    Ok(Outcome {
        results,
        errors: vec![],
        csv: Some((header, vec![row])),
        notes: vec![],
        code: 0,
    })
}

fn cmd_pexp(cfg: &RunConfig) -> Outcome {
    match pexp_fit(cfg) {
        Ok(o) => o,
        Err(e) => Outcome::failed(e),
    }
}

fn summary(e: &ExponentEstimate) -> Value {
    json!({
        "slope": e.slope,
        "intercept": e.intercept,
        "r_squared": e.r_squared,
        "acceptance_grade": e.acceptance_grade(),
        "scales_used": e.js.len(),
        "dropped": e.dropped.iter().map(|(j, why)| json!({ "j": j, "reason": why })).collect::<Vec<_>>(),
    })
}

fn pexp_fit(cfg: &RunConfig) -> Result<Outcome, Error> {
    let spec = parse_x(cfg)?;
    let p = cfg.p.unwrap_or(1.0);
    let (jmin, jmax) = (cfg.jmin.unwrap_or(8), cfg.jmax.unwrap_or(18));
    let e = estimate_p_exponent(&spec.number, p, jmin, jmax)?;
    let l2 = std::f64::consts::LN_2;
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    for (i, &j) in e.js.iter().enumerate() {
        let (lr, lm) = e.scales[i];
        let m = lm.exp();
        let err = e.errors[i] / (m * l2);
        rows.push(json!({ "j": j, "log2_rho": lr / l2, "log2_m": lm / l2, "log2_m_error": err }));
        csv_rows.push(vec![j.to_string(), format!("{}", lr / l2), format!("{}", lm / l2), format!("{err:e}")]);
    }
    let results = json!({
        "label": spec.number.label(),
        "p": p,
        "rows": rows,
        "summary": summary(&e),
    });
    let header = ["j", "log2_rho", "log2_M_p", "log2_M_p_error"].map(String::from).to_vec();
    Ok(Outcome {
        results,
        errors: vec![],
        csv: Some((header, csv_rows)),
        notes: vec![],
        code: 0,
    })
}

fn cmd_selftest(cfg: &RunConfig, stderr: &mut dyn Write) -> Outcome {
    let tol = Tolerances {
        scale: cfg.tol_scale.unwrap_or(1.0),
    };
    let ids: Vec<usize> = cfg.criteria.clone().unwrap_or_else(|| (1..=acceptance::CRITERIA).collect());
    if let Some(bad) = ids.iter().find(|&&i| !(1..=acceptance::CRITERIA).contains(&i)) {
        return Outcome::failed(Error::domain(format!(
            "criterion {bad} does not exist (1..={})",
            acceptance::CRITERIA
        )));
    }
    let mut reports: Vec<CriterionReport> = Vec::new();
    for id in ids {
        let r = acceptance::run_criterion(id, tol);
        let _ = writeln!(stderr, "{}", r.line());
        reports.push(r);
    }
    let all = reports.iter().all(|r| r.passed);
    let _ = writeln!(
        stderr,
        "{} of {} criteria passed",
        reports.iter().filter(|r| r.passed).count(),
        reports.len()
    );
    let mut csv_rows = Vec::new();
    for r in &reports {
        for m in &r.measurements {
            csv_rows.push(vec![
                r.id.to_string(),
                r.title.to_string(),
                r.passed.to_string(),
                m.label.clone(),
                opt_str(m.value),
                m.target.clone(),
                m.ok.to_string(),
            ]);
        }
    }
    let criteria: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "title": r.title,
                "passed": r.passed,
                "within_budget": r.seconds <= r.budget_seconds,
                "budget_seconds": r.budget_seconds,
                "measurements": r.measurements.iter().map(|m| json!({
                    "label": m.label,
                    "value": if m.value.is_finite() { json!(m.value) } else { Value::Null },
                    "target": m.target,
                    "ok": m.ok,
                })).collect::<Vec<_>>(),
                "notes": r.notes.iter().filter(|n| !n.starts_with("runtime ")).collect::<Vec<_>>(),
            })
        })
        .collect();
    let header = ["id", "title", "passed", "label", "value", "target", "ok"].map(String::from).to_vec();
    Outcome {
        results: json!({ "passed": all, "criteria": criteria }),
        errors: vec![],
        csv: Some((header, csv_rows)),
        notes: vec![],
        code: if all { 0 } else { EXIT_CRITERIA_FAILED },
    }
}
