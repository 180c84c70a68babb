use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hartogs_core::config::{parse_config, DomainConfig};
use hartogs_core::curvature::{sweep, verdicts, CurvatureReport, DEFAULT_VERDICT_TOL};
use hartogs_core::diastasis::{resolvability_default, SeriesForm};
use hartogs_core::fixtures::{run_fixtures, SAMPLE_MARGIN};
use hartogs_core::immersion::{cross_check, decide, Answer, Target};
use hartogs_core::potentials::EvaluationPoint;
use hartogs_core::Error as CoreError;

const SCHEMA: &str = "1";

/// Exit status for a check that ran fine and answered "no".
const EXIT_NO: u8 = 2;

#[derive(Parser)]
#[command(name = "hartogs", version)]
#[command(about = "Curvature identities and immersion verdicts for Hartogs domains over classical bases")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Domain config file (`key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Number of sampled interior points
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Highest total degree of diastasis blocks examined
    #[arg(long, global = true, default_value_t = 10)]
    truncation: u32,

    /// Comma-separated metric scales; defaults to `scale.h` from the config
    #[arg(long, global = true, value_delimiter = ',')]
    h: Vec<f64>,

    /// C, CP or CH, optionally with `_finite` / `_infinite` (default infinite)
    #[arg(long, global = true, default_value = "CH")]
    target: String,

    /// Tolerance of the curvature verdicts
    #[arg(long, global = true, default_value_t = DEFAULT_VERDICT_TOL)]
    tol: f64,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Per-point metric, determinant, scalar curvature and residuals
    Curvature,
    /// Is the canonical metric Kähler-Einstein?
    CheckEinstein,
    /// Is the canonical metric extremal?
    CheckExtremal,
    /// Existence of an immersion into the chosen space form
    Immersion,
    /// Resolvability of the three diastasis series
    Diastasis,
    /// Curvature verdicts, immersion table and series checks together
    Report,
    /// The built-in regression suite
    Fixtures,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

struct Output {
    body: String,
    status: u8,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => match emit(&cli, &out.body) {
            Ok(()) => ExitCode::from(out.status),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(cli: &Cli, body: &str) -> Result<()> {
    match &cli.out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<Output> {
    if cli.samples < 1 {
        bail!("--samples must be at least 1");
    }
    if cli.truncation < 2 {
        bail!("--truncation must be at least 2");
    }
    if let Some(h) = cli.h.iter().find(|h| !h.is_finite() || **h <= 0.0) {
        bail!("--h values must be positive, got {h}");
    }
    if cli.command == Command::Fixtures {
        return fixtures(cli);
    }
    let path = cli.config.as_ref().context("--config is required for this command")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let domain = parse_config(&text).map_err(|e| match e {
        CoreError::Config { line, message } => anyhow::anyhow!("{}:{line}: {message}", path.display()),
        other => other.into(),
    })?;
    match cli.command {
        Command::Curvature => curvature(cli, &domain),
        Command::CheckEinstein | Command::CheckExtremal => check(cli, &domain),
        Command::Immersion => immersion(cli, &domain),
        Command::Diastasis => diastasis(cli, &domain),
        Command::Report => report(cli, &domain),
        Command::Fixtures => unreachable!(),
    }
}

fn to_json(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn scales(cli: &Cli, domain: &DomainConfig) -> Vec<f64> {
    if cli.h.is_empty() {
        vec![domain.spec.scale]
    } else {
        cli.h.clone()
    }
}

fn domain_json(domain: &DomainConfig) -> Value {
    let base = &domain.spec.base;
    let mus: Vec<String> = base.factors().iter().map(|f| f.mu.to_string()).collect();
    let tau = base.tau().ok();
    json!({
        "kind": base.kind().as_str(),
        "dims": base.dims(),
        "mu": mus,
        "fiber_dim": domain.spec.fiber_dim,
        "scale": domain.spec.scale,
        "einstein_constants": base.einstein_constants().ok(),
        "tau": tau.map(|t| t.value),
        "tau_exact": tau.and_then(|t| t.exact).map(|r| format!("{}/{}", r.numer(), r.denom())),
    })
}

fn sample(cli: &Cli, domain: &DomainConfig) -> Result<Vec<EvaluationPoint>> {
    Ok(domain.spec.sample_interior(cli.samples, cli.seed, SAMPLE_MARGIN)?)
}

fn coordinate_columns(p: &EvaluationPoint) -> Vec<String> {
    let mut cols = Vec::new();
    for (prefix, zs) in [("fiber", &p.fiber), ("base", &p.base)] {
        for k in 0..zs.len() {
            cols.push(format!("{prefix}{k}_re"));
            cols.push(format!("{prefix}{k}_im"));
        }
    }
    cols
}

fn curvature_csv(rows: &[CurvatureReport]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else { return out };
    let mut header = coordinate_columns(&first.point);
    header.extend(
        ["det_closed", "det_direct", "s_trace", "s_closed", "einstein_residual", "extremal_residual"].map(String::from),
    );
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        let mut fields: Vec<String> = Vec::new();
        for z in r.point.fiber.iter().chain(&r.point.base) {
            fields.push(z.re.to_string());
            fields.push(z.im.to_string());
        }
        for v in [r.det_closed, r.det_direct, r.scalar_trace, r.scalar_closed, r.einstein_residual, r.extremal_residual] {
            fields.push(v.to_string());
        }
        let _ = writeln!(out, "{}", fields.join(","));
    }
    out
}

fn curvature(cli: &Cli, domain: &DomainConfig) -> Result<Output> {
    let points = sample(cli, domain)?;
    let rows = sweep(&domain.spec, &points, false)?;
    let body = match cli.format {
        Format::Csv => curvature_csv(&rows),
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "fiber": r.point.fiber.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        "base": r.point.base.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        "det_closed": r.det_closed,
                        "det_direct": r.det_direct,
                        "s_trace": r.scalar_trace,
                        "s_closed": r.scalar_closed,
                        "einstein_residual": r.einstein_residual,
                        "extremal_residual": r.extremal_residual,
                    })
                })
                .collect();
            to_json(&json!({
                "schema": SCHEMA,
                "command": "curvature",
                "domain": domain_json(domain),
                "seed": cli.seed,
                "samples": cli.samples,
                "rows": rows,
            }))?
        }
    };
    Ok(Output { body, status: 0 })
}

fn check(cli: &Cli, domain: &DomainConfig) -> Result<Output> {
    let points = sample(cli, domain)?;
    let v = verdicts(&domain.spec, &points, cli.tol)?;
    let (name, verdict, residual, rule) = match cli.command {
        Command::CheckEinstein => (
            "check-einstein",
            v.is_einstein,
            v.max_einstein_residual,
            "max-norm of Ric + (n+1) g from the closed Ricci form",
        ),
        _ => (
            "check-extremal",
            v.is_extremal,
            v.max_extremal_residual,
            "max |d/dzbar of the scalar-curvature gradient field| by finite differences",
        ),
    };
    if !v.consistent {
        log::warn!("Einstein, extremal and constant-scalar verdicts disagree: {v:?}");
    }
    let key = if cli.command == Command::CheckEinstein { "is_einstein" } else { "is_extremal" };
    let body = to_json(&json!({
        "schema": SCHEMA,
        "command": name,
        "domain": domain_json(domain),
        key: verdict,
        "residual": residual,
        "tolerance": cli.tol,
        "rule": rule,
        "verdicts": v,
        "seed": cli.seed,
        "samples": cli.samples,
    }))?;
    Ok(Output { body, status: if verdict { 0 } else { EXIT_NO } })
}

fn cross_check_json(domain: &DomainConfig, target: Target, h: f64, truncation: u32) -> Result<Value> {
    match cross_check(&domain.spec, target, h, truncation, &domain.facts) {
        Ok(c) => Ok(json!({
            "agreement": c.agreement,
            "truncation": c.truncation,
            "form": c.form,
            "all_psd": c.all_psd,
            "rank_lower_bound": c.rank_lower_bound,
            "first_failure": c.first_failure,
        })),
        Err(CoreError::Capability(msg)) => Ok(json!({ "agreement": Value::Null, "truncation": truncation, "skipped": msg })),
        Err(e) => Err(e.into()),
    }
}

fn immersion(cli: &Cli, domain: &DomainConfig) -> Result<Output> {
    let target: Target = cli.target.parse()?;
    let mut items = Vec::new();
    let mut any_no = false;
    for h in scales(cli, domain) {
        let v = decide(target, h, &domain.facts)?;
        any_no |= v.answer == Answer::NotExists;
        items.push(json!({
            "target": v.target,
            "h": v.h,
            "answer": v.answer,
            "rule": v.rule,
            "provenance": v.provenance,
            "cross_check": cross_check_json(domain, target, h, cli.truncation)?,
        }));
    }
    let body = match items.as_slice() {
        [single] => {
            let mut obj = single.clone();
            obj["schema"] = json!(SCHEMA);
            obj["command"] = json!("immersion");
            to_json(&obj)?
        }
        _ => to_json(&json!({ "schema": SCHEMA, "command": "immersion", "verdicts": items }))?,
    };
    Ok(Output { body, status: if any_no { EXIT_NO } else { 0 } })
}

fn diastasis_verdicts(cli: &Cli, domain: &DomainConfig) -> Result<Vec<Value>> {
    let mut out = Vec::new();
    for h in scales(cli, domain) {
        for form in [SeriesForm::Euclidean, SeriesForm::Projective, SeriesForm::Hyperbolic] {
            let v = resolvability_default(form, &domain.spec, h, cli.truncation)?;
            out.push(json!({
                "form": v.form,
                "h": v.h,
                "truncation": v.truncation_degree,
                "all_psd": v.all_psd,
                "rank_lower_bound": v.rank_lower_bound,
                "rank_by_degree": v.rank_by_degree,
                "first_failure": v.first_failure.map(|f| json!({"i": f.i, "sigma": f.sigma, "min_eig": f.min_eigenvalue})),
                "relative_tolerance": v.relative_tolerance,
            }));
        }
    }
    Ok(out)
}

fn diastasis(cli: &Cli, domain: &DomainConfig) -> Result<Output> {
    let verdicts = diastasis_verdicts(cli, domain)?;
    let body = match cli.format {
        Format::Json => to_json(&json!({
            "schema": SCHEMA,
            "command": "diastasis",
            "domain": domain_json(domain),
            "verdicts": verdicts,
        }))?,
        Format::Csv => {
            let mut s = String::from("form,h,truncation,all_psd,rank_lower_bound,first_failure_i,first_failure_sigma,min_eig\n");
            for v in &verdicts {
                let ff = &v["first_failure"];
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    v["form"].as_str().unwrap_or(""),
                    v["h"],
                    v["truncation"],
                    v["all_psd"],
                    v["rank_lower_bound"],
                    ff.get("i").map_or(String::new(), Value::to_string),
                    ff.get("sigma").map_or(String::new(), Value::to_string),
                    ff.get("min_eig").map_or(String::new(), Value::to_string),
                );
            }
            s
        }
    };
    Ok(Output { body, status: 0 })
}

fn report(cli: &Cli, domain: &DomainConfig) -> Result<Output> {
    let points = sample(cli, domain)?;
    let curvature = verdicts(&domain.spec, &points, cli.tol)?;
    let mut immersions = Vec::new();
    for h in scales(cli, domain) {
        for target in Target::ALL {
            let v = decide(target, h, &domain.facts)?;
            immersions.push(json!({
                "target": v.target,
                "h": v.h,
                "answer": v.answer,
                "rule": v.rule,
                "provenance": v.provenance,
                "cross_check": cross_check_json(domain, target, h, cli.truncation)?,
            }));
        }
    }
    let series = match diastasis_verdicts(cli, domain) {
        Ok(v) => json!(v),
        Err(e) => match e.downcast_ref::<CoreError>() {
            Some(CoreError::Capability(msg)) => json!({ "skipped": msg }),
            _ => return Err(e),
        },
    };
    let body = to_json(&json!({
        "schema": SCHEMA,
        "command": "report",
        "domain": domain_json(domain),
        "seed": cli.seed,
        "samples": cli.samples,
        "curvature": curvature,
        "immersion": immersions,
        "diastasis": series,
    }))?;
    Ok(Output { body, status: 0 })
}

fn fixtures(cli: &Cli) -> Result<Output> {
    let (report, timings) = run_fixtures(cli.seed)?;
    for (id, t) in &timings {
        eprintln!("criterion {id:>2}: {:.3} s", t.as_secs_f64());
    }
    for c in report.criteria.iter().filter(|c| !c.passed) {
        eprintln!("criterion {} ({}) failed: {}", c.id, c.name, c.failures.join("; "));
    }
    let table: Vec<Value> = report
        .table
        .iter()
        .map(|row| json!({ "row": row.label, "answers": row.answers.iter().map(|a| a.as_str()).collect::<Vec<_>>() }))
        .collect();
    let body = to_json(&json!({
        "schema": SCHEMA,
        "command": "fixtures",
        "seed": report.seed,
        "all_passed": report.all_passed,
        "criteria": report.criteria,
        "table_columns": Target::ALL.iter().map(|t| t.as_str()).collect::<Vec<_>>(),
        "table": table,
    }))?;
    Ok(Output { body, status: if report.all_passed { 0 } else { EXIT_NO } })
}
