//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 for runtime
//! failures such as infinite messages or an exceeded oracle cap.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::beliefs::{check_admissible, check_min_consistent, compute_beliefs, DEFAULT_TIE_TOL};
use crate::covers::{build_two_cover_certificate, verify_cover};
use crate::engine::{run, Order, RunConfig, RunReport, RunStatus, Schedule, DEFAULT_MAX_SWEEPS, DEFAULT_TOL};
use crate::format::{parse_model_file, parse_params_file, parse_state, parse_trees, write_state, ModelFile};
use crate::graph::FactorGraph;
use crate::oracle::{brute_force_minimize_capped, OracleError, DEFAULT_STATE_CAP};
use crate::params::{
    classify_params, classify_params_with_search, make_trmp_params, make_uniform_params, AsyncViolation,
    Classification, OptimalityClass, SignViolation, SplitParams,
};

#[derive(Debug, Parser)]
#[command(name = "splitmin", version, about = "Splitting min-sum solver for discrete factor graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run message passing and report the estimate.
    Solve(SolveArgs),
    /// Report which optimality and convergence conditions the parameters meet.
    Check(CheckArgs),
    /// Exhaustive minimum and minimizers.
    Oracle(OracleArgs),
    /// Solve, then build a 2-cover certificate (pairwise binary models).
    Cover(SolveArgs),
    /// Admissibility and min-consistency residuals of a saved message state.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Sync,
    Async,
}

#[derive(Debug, Args)]
struct ParamsArg {
    /// Parameter source: ones, uniform, trmp:<path> or file:<path>.
    /// Defaults to the model's inline block, else ones.
    #[arg(long)]
    params: Option<String>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Model file in FGM format.
    model: PathBuf,
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, value_enum, default_value_t = ScheduleArg::Sync)]
    schedule: ScheduleArg,
    /// Variable order for the async schedule: natural or random:<seed>.
    #[arg(long, default_value = "natural")]
    order: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    /// Blend factor for sync messages, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[arg(long, default_value_t = DEFAULT_TIE_TOL)]
    tie_tol: f64,
    /// Write the per-sweep trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Also write the text report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the final message state.
    #[arg(long)]
    state_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    model: PathBuf,
    #[command(flatten)]
    params: ParamsArg,
    /// Also search for a global conical decomposition.
    #[arg(long)]
    search: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
    /// Maximum number of minimizers to list.
    #[arg(long, default_value_t = 20)]
    max_list: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    model: PathBuf,
    /// Message state file (MSG format).
    #[arg(long)]
    state: PathBuf,
    #[command(flatten)]
    params: ParamsArg,
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    cap: usize,
}

/// Where the splitting parameters come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsSource {
    Ones,
    Uniform,
    Trmp(PathBuf),
    File(PathBuf),
}

impl std::str::FromStr for ParamsSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ones" => Ok(Self::Ones),
            "uniform" => Ok(Self::Uniform),
            _ => match s.split_once(':') {
                Some(("trmp", p)) if !p.is_empty() => Ok(Self::Trmp(p.into())),
                Some(("file", p)) if !p.is_empty() => Ok(Self::File(p.into())),
                _ => Err(format!("unknown parameter source `{s}`")),
            },
        }
    }
}

/// Everything `solve` and `cover` need besides the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// `None` uses the model's inline parameters, else all ones.
    pub params: Option<ParamsSource>,
    pub run: RunConfig,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub state_out: Option<PathBuf>,
}

impl ParamsArg {
    fn source(&self) -> Result<Option<ParamsSource>, Failure> {
        self.params.as_deref().map(str::parse).transpose().map_err(Failure::Usage)
    }
}

impl SolveArgs {
    fn config(&self) -> Result<SolveConfig, Failure> {
        let params = self.params.source()?;
        let order = match self.order.as_str() {
            "natural" => Order::Natural,
            o => match o.strip_prefix("random:").map(str::parse::<u64>) {
                Some(Ok(seed)) => Order::Random(seed),
                _ => return Err(Failure::Usage(format!("unknown order `{o}`"))),
            },
        };
        let schedule = match self.schedule {
            ScheduleArg::Sync => Schedule::Sync,
            ScheduleArg::Async => Schedule::Async(order),
        };
        Ok(SolveConfig {
            params,
            run: RunConfig {
                schedule,
                tol: self.tol,
                max_sweeps: self.max_sweeps,
                damping: self.damping,
                tie_tol: self.tie_tol,
            },
            trace: self.trace.clone(),
            report: self.report.clone(),
            state_out: self.state_out.clone(),
        })
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
    /// A run that aborted; the partial report still goes to stdout.
    Aborted(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) | Failure::Aborted(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) | Failure::Aborted(m) => m,
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<ModelFile, Failure> {
    parse_model_file(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_params(source: Option<&ParamsSource>, model: &ModelFile) -> Result<SplitParams, Failure> {
    let usage = |e: &dyn std::fmt::Display| Failure::Usage(format!("parameters: {e}"));
    let g = &model.graph;
    let Some(source) = source else {
        return Ok(model.params.clone().unwrap_or_else(|| SplitParams::ones(g)));
    };
    match source {
        ParamsSource::Ones => Ok(SplitParams::ones(g)),
        ParamsSource::Uniform => make_uniform_params(g).map_err(|e| usage(&e)),
        ParamsSource::Trmp(path) => {
            let trees = parse_trees(&read(path)?).map_err(|e| usage(&e))?;
            make_trmp_params(g, &trees).map_err(|e| usage(&e))
        }
        ParamsSource::File(path) => parse_params_file(&read(path)?, g).map_err(|e| usage(&e)),
    }
}

fn oracle_failure(e: OracleError) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Parses `args` (including the program name) and runs the command,
/// writing normal output to `out` and diagnostics to `err`.
pub fn run_command(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => a.config().and_then(|cfg| solve(&a.model, &cfg, false)),
        Command::Cover(a) => a.config().and_then(|cfg| solve(&a.model, &cfg, true)),
        Command::Check(a) => check(&a),
        Command::Oracle(a) => oracle(&a),
        Command::Verify(a) => verify(&a),
    };
    match result {
        Ok(text) => {
            let _ = write!(out, "{text}");
            0
        }
        Err(Failure::Aborted(text)) => {
            let _ = write!(out, "{text}");
            let _ = writeln!(err, "error: message passing produced an infinite message");
            2
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn assignment_text(x: &[usize]) -> String {
    x.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn report_text(g: &FactorGraph, report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status {}", report.status);
    let _ = writeln!(s, "sweeps {}", report.sweeps);
    let _ = writeln!(s, "final_delta {}", report.final_delta);
    let _ = writeln!(s, "class {}", report.class);
    match report.lower_bound {
        Some(lb) => {
            let _ = writeln!(s, "lower_bound {lb}");
        }
        None => s.push_str("lower_bound none\n"),
    }
    let sets: Vec<String> = report
        .estimate
        .argmin_sets
        .iter()
        .map(|set| format!("{{{}}}", set.iter().map(usize::to_string).collect::<Vec<_>>().join(",")))
        .collect();
    let _ = writeln!(s, "argmin_sets {}", sets.join(" "));
    let _ = writeln!(s, "unique {}", report.estimate.unique);
    match &report.estimate.assignment {
        Some(x) => {
            let _ = writeln!(s, "estimate {}", assignment_text(x));
            let _ = writeln!(s, "objective {}", g.evaluate_unchecked(x));
        }
        None => s.push_str("estimate none\n"),
    }
    if let Some((edge, direction)) = report.fault {
        let _ = writeln!(s, "fault edge {edge} {direction:?}");
    }
    s
}

fn trace_csv(report: &RunReport) -> String {
    let mut s = String::from("sweep,lb,max_belief_delta\n");
    for row in &report.trace {
        let lb = row.lb.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", row.sweep, lb, row.max_belief_delta);
    }
    s
}

fn solve(model: &Path, cfg: &SolveConfig, with_cover: bool) -> Result<String, Failure> {
    let model = load_model(model)?;
    let c = load_params(cfg.params.as_ref(), &model)?;
    let g = model.graph;
    let report = run(&g, &c, &cfg.run).map_err(|e| match e {
        crate::engine::EngineError::Config(m) => Failure::Usage(m),
        crate::engine::EngineError::Params(p) => Failure::Usage(p.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    let mut text = report_text(&g, &report);
    if let Some(path) = &cfg.trace {
        write_file(path, &trace_csv(&report))?;
    }
    if let Some(path) = &cfg.state_out {
        write_file(path, &write_state(&g, &report.state))?;
    }
    if report.status == RunStatus::InfiniteMessage {
        if let Some(path) = &cfg.report {
            write_file(path, &text)?;
        }
        return Err(Failure::Aborted(text));
    }
    if with_cover {
        let cert = build_two_cover_certificate(&g, &report.beliefs, cfg.run.tie_tol)
            .map_err(|e| Failure::Runtime(format!("certificate: {e}")))?;
        let check = verify_cover(&cert.cover);
        text.push_str("certificate\n");
        text.push_str(&cert.dump());
        let _ = writeln!(text, "cover_valid {}", check.is_k_cover(2));
        match brute_force_minimize_capped(&cert.cover.cover, DEFAULT_STATE_CAP) {
            Ok(m) => {
                let _ = writeln!(text, "cover_min {}", m.value);
            }
            Err(_) => text.push_str("cover_min unavailable\n"),
        }
    }
    if let Some(path) = &cfg.report {
        write_file(path, &text)?;
    }
    Ok(text)
}

fn sign_text(v: &SignViolation, local: bool) -> String {
    match v {
        SignViolation::Factor { factor, value } => format!("factor {factor}: c_α = {value}"),
        SignViolation::Variable { var, value } if local => {
            format!("variable {var}: c_i(1 − Σc_α) + Σc_α = {value}")
        }
        SignViolation::Variable { var, value } => format!("variable {var}: (1 − Σc_α)c_i = {value}"),
    }
}

fn async_text(v: &AsyncViolation) -> String {
    match v {
        AsyncViolation::VariableNotOne { var, value } => format!("variable {var}: c_i = {value}"),
        AsyncViolation::FactorNonPositive { factor, value } => format!("factor {factor}: c_α = {value}"),
        AsyncViolation::NeighborSum { var, sum } => format!("variable {var}: Σc_α = {sum}"),
    }
}

fn classification_text(cls: &Classification, searched: bool) -> String {
    let mut s = String::new();
    let headline = match (&cls.class, &cls.global_sign) {
        (OptimalityClass::GlobalSign, _) | (_, None) => cls.class.to_string(),
        (class, Some(v)) => format!("{class}; GlobalSign FAILED at {}", sign_text(v, false)),
    };
    let _ = writeln!(s, "{headline}");
    let cond = |name: &str, failure: Option<String>| match failure {
        None => format!("{name}: holds\n"),
        Some(f) => format!("{name}: FAILED at {f}\n"),
    };
    s.push_str(&cond("GlobalSign", cls.global_sign.as_ref().map(|v| sign_text(v, false))));
    if searched {
        let found = cls.class >= OptimalityClass::GlobalConical;
        s.push_str(&cond("GlobalConical", (!found).then(|| "search: no decomposition".to_string())));
    }
    s.push_str(&cond("LocalOnly", cls.local.as_ref().map(|v| sign_text(v, true))));
    s.push_str(&cond("async_convergent", cls.async_condition.as_ref().map(async_text)));
    let _ = writeln!(s, "standard_minsum: {}", if cls.standard_minsum { "holds" } else { "no" });
    s
}

fn check(a: &CheckArgs) -> Result<String, Failure> {
    let model = load_model(&a.model)?;
    let c = load_params(a.params.source()?.as_ref(), &model)?;
    let g = model.graph;
    let cls = if a.search {
        classify_params_with_search(&c, &g)
    } else {
        classify_params(&c, &g)
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(classification_text(&cls, a.search))
}

fn oracle(a: &OracleArgs) -> Result<String, Failure> {
    let g = load_model(&a.model)?.graph;
    let m = brute_force_minimize_capped(&g, a.cap).map_err(oracle_failure)?;
    let mut s = format!("min {}, {} minimizers\n", m.value, m.minimizers.len());
    for x in m.minimizers.iter().take(a.max_list) {
        let _ = writeln!(s, "x {}", assignment_text(x));
    }
    Ok(s)
}

fn verify(a: &VerifyArgs) -> Result<String, Failure> {
    let model = load_model(&a.model)?;
    let c = load_params(a.params.source()?.as_ref(), &model)?;
    let g = model.graph;
    let state = parse_state(&read(&a.state)?, &g).map_err(|e| Failure::Usage(format!("state: {e}")))?;
    let b = compute_beliefs(&g, &c, &state).map_err(|e| Failure::Runtime(e.to_string()))?;
    let adm = check_admissible(&g, &c, &b, a.cap).map_err(oracle_failure)?;
    let mc = check_min_consistent(&g, &b);
    Ok(format!(
        "kappa {}\nadmissibility_residual {adm}\nmin_consistency_residual {mc}\n",
        b.kappa
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_source_parsing() {
        assert_eq!("ones".parse::<ParamsSource>(), Ok(ParamsSource::Ones));
        assert_eq!(
            "trmp:t.txt".parse::<ParamsSource>(),
            Ok(ParamsSource::Trmp("t.txt".into()))
        );
        assert!("file:".parse::<ParamsSource>().is_err());
        assert!("bogus".parse::<ParamsSource>().is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let args: Vec<String> = ["splitmin", "frobnicate"].iter().map(|s| s.to_string()).collect();
        assert_eq!(run_command(&args, &mut out, &mut err), 1);
        let args: Vec<String> = ["splitmin", "oracle", "/nonexistent.fgm"].iter().map(|s| s.to_string()).collect();
        assert_eq!(run_command(&args, &mut out, &mut err), 1);
    }
}
