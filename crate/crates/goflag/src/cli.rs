//! Command-line front end: flag catalogs, decompositions, parameter
//! schemas, metric checks and per-rank classification surveys.
//!
//! Every report echoes its [`RunConfig`] and the crate version, and output
//! depends only on the configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::flag_manifold::{build_decomposition, enumerate_thetas, CaseKind, ThetaSpec};
use crate::go_checker::{
    check_go, family_dimension, go_family, obstruction_scan, Tolerances, Verdict,
};
use crate::invariant_metric::{
    build_metric, check_invariance, normal_params, param_schema, random_invariant_metric,
    MetricParams,
};
use crate::lie_algebra::{Family, LieTypeSpec};
use crate::scalar::{Exact, Field, Num};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit code for usage, parse and construction errors.
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "goflag",
    version,
    about = "Invariant metrics and geodesic-orbit checks on real flag manifolds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Every proper flag of a family and rank, with dimensions and submodules.
    List(RunConfig),
    /// Adapted basis and isotropy submodules of one flag.
    Decompose(RunConfig),
    /// Parameter schema of the invariant metrics of one flag.
    Schema(RunConfig),
    /// Invariance, geodesic-orbit sweep and closed form for one metric.
    Check(RunConfig),
    /// Survey of g.o. families over all flags of a rank.
    Classify(RunConfig),
}

impl Cli {
    /// Output file requested with `--out`.
    pub fn out_path(&self) -> Option<&PathBuf> {
        self.command.config().out.as_ref()
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::List(_) => "list",
            Command::Decompose(_) => "decompose",
            Command::Schema(_) => "schema",
            Command::Check(_) => "check",
            Command::Classify(_) => "classify",
        }
    }

    fn config(&self) -> &RunConfig {
        match self {
            Command::List(c)
            | Command::Decompose(c)
            | Command::Schema(c)
            | Command::Check(c)
            | Command::Classify(c) => c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Options shared by all commands; each command reads the ones it needs.
#[derive(Args, Debug, Clone, Serialize)]
pub struct RunConfig {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub rank: usize,
    /// Block sizes l_1,...,l_r, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub partition: Vec<usize>,
    /// α_l ∈ Θ (types B, C, D).
    #[arg(long)]
    pub alpha_l: bool,
    /// Asserts α_(l-1) ∈ Θ for type D; it must agree with the partition.
    #[arg(long = "alpha-l-1")]
    pub alpha_l_1: bool,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Float-mode pass threshold, relative to 1 + |AX|.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Random test vectors on top of basis vectors and pairwise sums.
    #[arg(long, default_value_t = 64)]
    pub samples: usize,
    /// Required by the randomized commands (check, classify).
    #[arg(long)]
    pub seed: Option<u64>,
    /// MetricParams JSON file for `check`; the normal metric when omitted.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

impl RunConfig {
    fn lie_type(&self) -> Result<LieTypeSpec> {
        LieTypeSpec::new(self.family, self.rank)
    }

    fn theta(&self) -> Result<ThetaSpec> {
        if self.partition.is_empty() {
            return Err(Error::Theta(
                "--partition is required for this command".into(),
            ));
        }
        let lm1 = (self.family == Family::D && self.alpha_l_1).then_some(true);
        ThetaSpec::new(self.lie_type()?, self.partition.clone(), self.alpha_l, lm1)
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Params("--seed is required for randomized commands".into()))
    }
}

/// Rendered report and process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

/// A command result: either a table or a nested document.
enum Body {
    Table {
        columns: Vec<&'static str>,
        rows: Vec<Vec<Value>>,
    },
    Doc(Value),
}

/// Runs a parsed command. Errors become exit code [`EXIT_ERROR`] with the
/// message as output.
pub fn run(cli: &Cli) -> Output {
    let cfg = cli.command.config();
    let result = match &cli.command {
        Command::List(c) => cmd_list(c).map(|b| (b, 0)),
        Command::Decompose(c) => cmd_decompose(c).map(|b| (b, 0)),
        Command::Schema(c) => cmd_schema(c).map(|b| (b, 0)),
        Command::Check(c) => match c.mode {
            ModeArg::Exact => cmd_check::<Exact>(c),
            ModeArg::Float => cmd_check::<f64>(c),
        },
        Command::Classify(c) => cmd_classify(c),
    };
    match result {
        Ok((body, code)) => Output {
            text: render(cli.command.name(), cfg, body),
            code,
        },
        Err(e) => Output {
            text: format!("error: {e}\n"),
            code: EXIT_ERROR,
        },
    }
}

fn render(command: &str, cfg: &RunConfig, body: Body) -> String {
    let header = json!({ "command": command, "version": VERSION, "config": cfg });
    match (cfg.format, body) {
        (Format::Json, Body::Table { columns, rows }) => {
            let rows: Vec<Value> = rows
                .into_iter()
                .map(|r| Value::Object(columns.iter().map(|c| c.to_string()).zip(r).collect()))
                .collect();
            pretty(&json!({ "report": header, "rows": rows }))
        }
        (Format::Json, Body::Doc(v)) => pretty(&json!({ "report": header, "result": v })),
        (Format::Csv, body) => {
            let (columns, rows) = match body {
                Body::Table { columns, rows } => {
                    (columns.iter().map(|c| c.to_string()).collect(), rows)
                }
                Body::Doc(v) => {
                    let mut flat = Vec::new();
                    flatten("", &v, &mut flat);
                    (
                        vec!["key".to_string(), "value".to_string()],
                        flat.into_iter()
                            .map(|(k, v)| vec![Value::String(k), v])
                            .collect(),
                    )
                }
            };
            let mut w = csv::WriterBuilder::new()
                .flexible(true)
                .from_writer(Vec::new());
            w.write_record([format!(
                "# goflag {VERSION} {command} {}",
                compact(&cfg_json(cfg))
            )])
            .expect("in-memory write");
            w.write_record(&columns).expect("in-memory write");
            for r in rows {
                w.write_record(r.iter().map(cell)).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
        }
        (Format::Text, body) => {
            let mut out = format!("goflag {VERSION} {command} {}\n", compact(&cfg_json(cfg)));
            match body {
                Body::Table { columns, rows } => {
                    let cells: Vec<Vec<String>> =
                        rows.iter().map(|r| r.iter().map(cell).collect()).collect();
                    let widths: Vec<usize> = (0..columns.len())
                        .map(|j| {
                            cells
                                .iter()
                                .map(|r| r[j].chars().count())
                                .chain([columns[j].len()])
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    let line = |vals: Vec<String>| -> String {
                        let padded: Vec<String> = vals
                            .iter()
                            .zip(&widths)
                            .map(|(v, w)| format!("{v:<w$}", w = *w))
                            .collect();
                        padded.join("  ").trim_end().to_string() + "\n"
                    };
                    out += &line(columns.iter().map(|c| c.to_string()).collect());
                    for r in cells {
                        out += &line(r);
                    }
                }
                Body::Doc(v) => {
                    let mut flat = Vec::new();
                    flatten("", &v, &mut flat);
                    for (k, v) in flat {
                        out += &format!("{k}: {}\n", cell(&v));
                    }
                }
            }
            out
        }
    }
}

fn cfg_json(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("json serializes")
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => compact(other),
    }
}

/// Dotted-path listing of the scalar leaves of a JSON document.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&join(k), x, out)),
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => a
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten(&join(&i.to_string()), x, out)),
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn cmd_list(cfg: &RunConfig) -> Result<Body> {
    let spec = cfg.lie_type()?;
    let mut rows = Vec::new();
    for theta in enumerate_thetas(&spec)
        .into_iter()
        .filter(|t| !t.is_degenerate())
    {
        let dec = build_decomposition::<Exact>(&theta)?;
        let schema = param_schema(&dec)?;
        let subs: Vec<String> = dec
            .submodules
            .iter()
            .map(|s| format!("{}:{}", s.name, s.dim()))
            .collect();
        let case = theta.case();
        rows.push(vec![
            json!(theta.theta_label()),
            json!(theta
                .partition
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")),
            json!(theta.alpha_l),
            json!(case.tag()),
            json!(if case.is_special() { "special" } else { "" }),
            json!(dec.dim_k_theta()),
            json!(dec.dim_m()),
            json!(dec.summands.len()),
            json!(schema.count()),
            json!(subs.join(" ")),
        ]);
    }
    Ok(Body::Table {
        columns: vec![
            "theta",
            "partition",
            "alpha_l",
            "case",
            "special",
            "dim_k_theta",
            "dim_m",
            "summands",
            "params",
            "submodules",
        ],
        rows,
    })
}

fn cmd_decompose(cfg: &RunConfig) -> Result<Body> {
    let dec = build_decomposition::<Exact>(&cfg.theta()?)?;
    Ok(Body::Doc(dec.summary_json()))
}

fn cmd_schema(cfg: &RunConfig) -> Result<Body> {
    let dec = build_decomposition::<Exact>(&cfg.theta()?)?;
    Ok(Body::Doc(param_schema(&dec)?.to_json()))
}

fn load_params(cfg: &RunConfig) -> Result<Option<MetricParams>> {
    match &cfg.params {
        None => Ok(None),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Ok(Some(MetricParams::from_json(&serde_json::from_str(
                &text,
            )?)?))
        }
    }
}

fn cmd_check<F: Field>(cfg: &RunConfig) -> Result<(Body, i32)> {
    let seed = cfg.seed()?;
    let theta = cfg.theta()?;
    let dec = build_decomposition::<F>(&theta)?;
    let params = match load_params(cfg)? {
        Some(p) => p,
        None => normal_params(&dec, 1)?,
    };
    let op = build_metric(&dec, &params)?;
    let invariance = check_invariance(&op, 8, seed);
    if !invariance.passed {
        return Err(Error::NotInvariant(invariance.failures.join(", ")));
    }
    let report = check_go(&op, cfg.samples, seed, Tolerances::with_pass(cfg.tol))?;
    let facts = obstruction_scan(&op);
    let mut result = json!({
        "theta": theta.theta_label(),
        "case": theta.case().tag(),
        "params": params.to_json(),
        "invariance": invariance,
        "go": report.to_json(&dec),
        "obstruction_count": facts.len(),
        "obstructions": facts.iter().take(20).map(|f| f.to_string()).collect::<Vec<_>>(),
        "exit_code": report.exit_code(),
    });
    if report.verdict == Verdict::Undecided {
        result["recommendation"] =
            json!("residuals fell between the pass and fail thresholds; re-run with --mode exact");
    }
    Ok((Body::Doc(result), report.exit_code()))
}

/// Short description of the g.o. metrics of a flag.
fn family_description(theta: &ThetaSpec) -> &'static str {
    match theta.case() {
        CaseKind::Degenerate => "point",
        CaseKind::AGeneric => "normal only",
        CaseKind::A3Empty => "common μ; b1 = -b2 = b3",
        CaseKind::A3Alpha(_) => "mu21 = mu22 = μ2; b^2 = μ2(μ2 - μ1)",
        CaseKind::A3Alpha13 => "all invariant metrics",
        CaseKind::A3Irreducible => "all invariant metrics (irreducible)",
        CaseKind::BNoAlphaL if theta.r() == 1 => "all invariant metrics (single block)",
        CaseKind::BNoAlphaL => "(λ, b): μ = λ + b, γ = (λ^2 - b^2)/λ",
        CaseKind::BAlphaL => "(λ, b): μ = λ + b, ρ = λ - b, γ = 2μρ/(μ + ρ)",
        CaseKind::CNoAlphaL | CaseKind::CAlphaL => {
            "(μ, c): M0 = μI + c v v^T, v_i = sqrt(l_i); μ elsewhere"
        }
        CaseKind::C4Empty | CaseKind::C4Alpha(_) => "numeric only",
        CaseKind::DNoAlphaL | CaseKind::DAlphaLOnly => "(λ, b): γ = (λ^2 - b^2)/λ",
        CaseKind::DBoth => {
            "normal only with M_rn irreducible; split M_rn: (λ, b) with halves λ ± b"
        }
    }
}

fn cmd_classify(cfg: &RunConfig) -> Result<(Body, i32)> {
    let seed = cfg.seed()?;
    let spec = cfg.lie_type()?;
    let mut rows = Vec::new();
    let mut code = 0;
    for (i, theta) in enumerate_thetas(&spec)
        .into_iter()
        .filter(|t| !t.is_degenerate())
        .enumerate()
    {
        let dec = build_decomposition::<Exact>(&theta)?;
        let dim = family_dimension(&theta)?;
        let non_normal = match dim {
            None => "numeric only",
            Some(d) if d >= 2 => "yes",
            Some(_) => "no",
        };
        let row_seed = seed.wrapping_add(i as u64);
        let params = if non_normal == "yes" {
            let free: BTreeMap<String, Num> = [
                ("b".to_string(), Num::from(1)),
                ("c".to_string(), Num::from(1)),
            ]
            .into_iter()
            .collect();
            go_family(&theta, &free)?
        } else {
            random_invariant_metric(&dec, row_seed)?
        };
        let op = build_metric(&dec, &params)?;
        let report = check_go(&op, cfg.samples, row_seed, Tolerances::with_pass(cfg.tol))?;
        let probe = random_invariant_metric(&dec, row_seed ^ 0x9e37_79b9)?;
        let facts = obstruction_scan(&build_metric(&dec, &probe)?);
        if !report.agreement || report.verdict == Verdict::Undecided {
            code = 2;
        }
        rows.push(vec![
            json!(theta.theta_label()),
            json!(theta.case().tag()),
            json!(family_description(&theta)),
            json!(non_normal),
            dim.map_or(Value::Null, |d| json!(d)),
            json!(if non_normal == "yes" {
                "family member"
            } else {
                "random metric"
            }),
            json!(report.verdict),
            json!(report.certified),
            json!(report.agreement),
            json!(report.max_residual),
            json!(facts.len()),
        ]);
    }
    Ok((
        Body::Table {
            columns: vec![
                "theta",
                "case",
                "go_family",
                "non_normal_go",
                "family_dim",
                "spot_check",
                "spot_verdict",
                "spot_certified",
                "spot_agreement",
                "spot_max_residual",
                "obstructions_on_random_metric",
            ],
            rows,
        },
        code,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Cli {
        Cli::try_parse_from(std::iter::once("goflag").chain(args.split_whitespace())).unwrap()
    }

    #[test]
    fn list_a3_has_seven_proper_flags() {
        let out = run(&parse("list --family A --rank 3 --format json"));
        assert_eq!(out.code, 0);
        let v: Value = serde_json::from_str(&out.text).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 7);
        assert_eq!(
            rows.iter()
                .filter(|r| r["case"] == "A3_irreducible")
                .count(),
            2
        );
    }

    #[test]
    fn list_b4_is_out_of_range() {
        let out = run(&parse("list --family B --rank 4"));
        assert_eq!(out.code, EXIT_ERROR);
        assert!(out.text.contains("l >= 5"), "{}", out.text);
    }

    #[test]
    fn list_c4_marks_special_flags() {
        let out = run(&parse("list --family C --rank 4 --format csv"));
        let special: Vec<&str> = out
            .text
            .lines()
            .skip(2)
            .filter(|l| l.contains(",special,"))
            .collect();
        assert_eq!(special.len(), 4);
        assert!(special.iter().all(|l| l.contains("C4_")));
    }

    #[test]
    fn check_normal_metric_exits_zero() {
        let out = run(&parse(
            "check --family D --rank 5 --partition 2,3 --seed 1 --samples 4",
        ));
        assert_eq!(out.code, 0, "{}", out.text);
        assert!(out.text.contains("\"config\""));
    }

    #[test]
    fn randomized_commands_need_a_seed() {
        let out = run(&parse("check --family A --rank 2 --partition 1,1,1"));
        assert_eq!(out.code, EXIT_ERROR);
    }

    #[test]
    fn classify_a4_is_normal_only() {
        let out = run(&parse(
            "classify --family A --rank 4 --seed 3 --samples 4 --format json",
        ));
        assert_eq!(out.code, 0, "{}", out.text);
        let v: Value = serde_json::from_str(&out.text).unwrap();
        assert!(v["rows"]
            .as_array()
            .unwrap()
            .iter()
            .all(|r| r["go_family"] == "normal only"));
    }
}
