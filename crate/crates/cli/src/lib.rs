//! Command-line front end: `solve`, `eig`, `bench` and `check`.

pub mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mnewton::direction::{GammaParams, DEFAULT_CAP, DEFAULT_DELTA};
use mnewton::exec::Execution;
use mnewton::linalg::{norm2, parse_reals, LinalgError, SymMatrix};
use mnewton::problems::{by_name, check_problem, problem_names, quadratic, standard_set, Problem};
use mnewton::solver::{
    minimize, NormRule, SolveReport, SolveStatus, SolverConfig, SolverError, DEFAULT_EPS,
    DEFAULT_MAX_ITER,
};
use mnewton::sphere::{
    cg_extreme_eig, default_start, jacobi_pair, EigConfig, EigEstimate, EigMethod, Extreme,
    SphereError, DEFAULT_ITER_FACTOR,
};
use mnewton::suite::{run_suite, SuiteRow};
use thiserror::Error;

use report::{CheckRow, ConfigEcho, EigPayload, Payload, RunReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_FAILED: u8 = 2;

/// Residual tolerance used by `eig` unless `--tol` is given.
pub const DEFAULT_EIG_CLI_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown problem {0:?}; known problems: {known}", known = problem_names().join(", "))]
    UnknownProblem(String),
    #[error("unknown suite {0:?}; available: standard")]
    UnknownSuite(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Matrix { path: PathBuf, source: LinalgError },
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "mnewton",
    version,
    about = "Modified Newton solver and sphere eigenvalue tools"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize a named problem or a quadratic read from a file.
    Solve(SolveArgs),
    /// Extreme eigenvalues of a symmetric matrix file.
    Eig(EigArgs),
    /// Solve every problem of a suite.
    Bench(BenchArgs),
    /// Compare analytic derivatives with finite differences.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Euclid,
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    Min,
    Max,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Gradient tolerance.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    pub eps: f64,
    /// Floor on the smallest eigenvalue of the modified Hessian.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    /// Ceiling on the condition number of the modified Hessian.
    #[arg(long = "Delta", default_value_t = DEFAULT_CAP)]
    pub cap: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Norm used in the stopping test.
    #[arg(long, value_enum, default_value_t = NormArg::Euclid)]
    pub norm: NormArg,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            eps: self.eps,
            gamma_params: GammaParams {
                delta: self.delta,
                cap: self.cap,
            },
            max_iter: self.max_iter,
            norm_rule: match self.norm {
                NormArg::Euclid => NormRule::Euclid,
                NormArg::Inf => NormRule::Inf,
            },
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem name, or a file holding a matrix followed by a line for `b`.
    pub problem: String,
    /// Start point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Print the per-iteration trace.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EigArgs {
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = WhichArg::Both)]
    pub which: WhichArg,
    #[arg(long, default_value_t = DEFAULT_EIG_CLI_TOL)]
    pub tol: f64,
    /// Iteration cap per extreme; defaults to 10·n.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// `alt`, `e1`, `ones`, or a file of n reals.
    #[arg(long)]
    pub x0: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "standard")]
    pub suite: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Run problems one after another instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    pub problem: String,
    /// Multiplies the first gradient entry; exercises the failure path.
    #[arg(long, hide = true, default_value_t = 1.0)]
    pub fault_scale: f64,
    #[arg(long)]
    pub json: bool,
}

/// Everything a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: u8, stdout: String) -> Self {
        Self {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(EXIT_OK, text)
            };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a)
            .map(|(r, code)| render(&r, a.json, code, |out| human_solve(&r, a.trace, out))),
        Command::Eig(a) => {
            cmd_eig(a).map(|r| render(&r, a.json, EXIT_OK, |out| human_eig(&r, out)))
        }
        Command::Bench(a) => cmd_bench(a).map(|(r, code)| {
            if a.csv {
                Ok(Outcome::ok(code, bench_csv(&r)))
            } else {
                render(&r, a.json, code, |out| human_bench(&r, out))
            }
        }),
        Command::Check(a) => {
            cmd_check(a).map(|(r, code)| render(&r, a.json, code, |out| human_check(&r, out)))
        }
    };
    match result.and_then(|r| r) {
        Ok(out) => out,
        Err(e) => Outcome::usage(e),
    }
}

fn render(
    report: &RunReport,
    json: bool,
    code: u8,
    human: impl FnOnce(&mut String),
) -> Result<Outcome, CliError> {
    let mut out = String::new();
    if json {
        out = report.to_json()?;
        out.push('\n');
    } else {
        human(&mut out);
    }
    Ok(Outcome::ok(code, out))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

/// A quadratic `½xᵀAx − bᵀx` from text: the matrix format followed by a line
/// holding `b`.
pub fn parse_problem_file(path: &Path) -> Result<Problem, CliError> {
    let text = read(path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let Some((b_line, matrix_lines)) = lines.split_last() else {
        return Err(CliError::Input(format!(
            "{}: empty problem file",
            path.display()
        )));
    };
    let a: SymMatrix = matrix_lines
        .join("\n")
        .parse()
        .map_err(|source| CliError::Matrix {
            path: path.to_owned(),
            source,
        })?;
    let b = parse_reals(b_line)
        .map_err(|m| CliError::Input(format!("{}: right-hand side: {m}", path.display())))?;
    let name = path.file_stem().map_or_else(
        || "quadratic".to_owned(),
        |s| s.to_string_lossy().into_owned(),
    );
    let mut p = quadratic(a, b).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    p.name = name;
    Ok(p)
}

fn resolve_problem(spec: &str) -> Result<Problem, CliError> {
    if let Some(p) = by_name(spec) {
        return Ok(p);
    }
    let path = Path::new(spec);
    if path.is_file() {
        return parse_problem_file(path);
    }
    Err(CliError::UnknownProblem(spec.to_owned()))
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(RunReport, u8), CliError> {
    let problem = resolve_problem(&a.problem)?;
    let x0 = match &a.x0 {
        Some(text) => parse_reals(text).map_err(|m| CliError::Input(format!("--x0: {m}")))?,
        None => problem.x0.clone(),
    };
    if x0.len() != problem.dim {
        return Err(CliError::Input(format!(
            "--x0 has {} entries, problem {} has dimension {}",
            x0.len(),
            problem.name,
            problem.dim
        )));
    }
    let cfg = a.solver.config();
    let report = minimize(&problem, &x0, &cfg)?;
    let code = if report.status == SolveStatus::Converged {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    let mut echo = ConfigEcho::from_solver(&cfg);
    echo.problem = Some(problem.name);
    echo.x0 = Some(x0);
    Ok((RunReport::new("solve", echo, Payload::Solve(report)), code))
}

/// Start vector for `eig --x0`.
pub fn eig_start(spec: Option<&str>, n: usize) -> Result<Vec<f64>, CliError> {
    let raw = match spec {
        None => return Ok(default_start(n)),
        Some("alt") => (0..n)
            .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
            .collect(),
        Some("e1") => (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        Some("ones") => vec![1.0; n],
        Some(path) => {
            let v = parse_reals(&read(Path::new(path))?)
                .map_err(|m| CliError::Input(format!("{path}: {m}")))?;
            if v.len() != n {
                return Err(CliError::Input(format!(
                    "{path}: start vector has {} entries, matrix has {n} rows",
                    v.len()
                )));
            }
            v
        }
    };
    let norm = norm2(&raw);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(CliError::Input(
            "start vector must be finite and nonzero".into(),
        ));
    }
    Ok(raw.iter().map(|v| v / norm).collect())
}

pub fn cmd_eig(a: &EigArgs) -> Result<RunReport, CliError> {
    let h: SymMatrix = read(&a.matrix)?
        .parse()
        .map_err(|source| CliError::Matrix {
            path: a.matrix.clone(),
            source,
        })?;
    let n = h.n();
    let start = eig_start(a.x0.as_deref(), n)?;
    let max_iter = a.max_iter.unwrap_or(DEFAULT_ITER_FACTOR * n);
    let run = |which| -> Result<EigEstimate, CliError> {
        Ok(cg_extreme_eig(
            &h,
            &start,
            &EigConfig::new(which, a.tol, max_iter)?,
        )?)
    };
    let mut payload = EigPayload {
        min: matches!(a.which, WhichArg::Min | WhichArg::Both)
            .then(|| run(Extreme::Min))
            .transpose()?,
        max: matches!(a.which, WhichArg::Max | WhichArg::Both)
            .then(|| run(Extreme::Max))
            .transpose()?,
    };
    let failed = |e: &Option<EigEstimate>| e.as_ref().is_some_and(|e| !e.converged);
    let inverted =
        matches!((&payload.min, &payload.max), (Some(lo), Some(hi)) if lo.value > hi.value);
    if failed(&payload.min) || failed(&payload.max) || inverted {
        let its = |e: &Option<EigEstimate>| e.as_ref().map_or(0, |e| e.iterations);
        let dense = jacobi_pair(&h, its(&payload.min), its(&payload.max))?;
        payload.min = payload.min.map(|_| dense.lo);
        payload.max = payload.max.map(|_| dense.hi);
    }

    let mut echo = ConfigEcho::from_solver(&SolverConfig::default());
    echo.max_iter = max_iter;
    echo.which = Some(format!("{:?}", a.which).to_lowercase());
    echo.eig_tol = Some(a.tol);
    echo.start = Some(a.x0.clone().unwrap_or_else(|| "default".into()));
    echo.problem = Some(a.matrix.display().to_string());
    Ok(RunReport::new("eig", echo, Payload::Eig(payload)))
}

pub fn cmd_bench(a: &BenchArgs) -> Result<(RunReport, u8), CliError> {
    let set = match a.suite.as_str() {
        "standard" => standard_set(),
        other => return Err(CliError::UnknownSuite(other.to_owned())),
    };
    let cfg = a.solver.config();
    let execution = if a.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let rows = run_suite(&set, &cfg, execution)?;
    let code = if rows.iter().all(|r| r.status == SolveStatus::Converged) {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    let mut echo = ConfigEcho::from_solver(&cfg);
    echo.suite = Some(a.suite.clone());
    Ok((RunReport::new("bench", echo, Payload::Bench(rows)), code))
}

pub fn cmd_check(a: &CheckArgs) -> Result<(RunReport, u8), CliError> {
    let mut problem =
        by_name(&a.problem).ok_or_else(|| CliError::UnknownProblem(a.problem.clone()))?;
    if a.fault_scale != 1.0 {
        let (inner, scale) = (problem.clone(), a.fault_scale);
        problem = problem.with_gradient(move |x| {
            let mut g = inner.gradient(x);
            g[0] *= scale;
            g
        });
    }
    let finite = |v: f64| v.is_finite().then_some(v);
    let rows: Vec<CheckRow> = check_problem(&problem)
        .into_iter()
        .map(|r| CheckRow {
            passed: r.passed(),
            grad_error: finite(r.grad_error),
            hess_error: finite(r.hess_error),
            point: r.point,
        })
        .collect();
    let code = if rows.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    let mut echo = ConfigEcho::from_solver(&SolverConfig::default());
    echo.problem = Some(problem.name);
    Ok((RunReport::new("check", echo, Payload::Check(rows)), code))
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::MaxIterations => "max_iterations",
        SolveStatus::LineSearchStalled => "line_search_stalled",
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.10}")).collect();
    format!("[{}]", parts.join(", "))
}

fn human_solve(r: &RunReport, trace: bool, out: &mut String) {
    let Payload::Solve(s) = &r.result else { return };
    let c = &r.config;
    let _ = writeln!(
        out,
        "problem     {}\nstatus      {}\niterations  {}\nf           {:.6e}\ngrad norm   {:.6e}\nx           {}",
        c.problem.as_deref().unwrap_or("?"),
        status_name(s.status),
        s.iterations,
        s.f_final,
        s.grad_norm_final,
        fmt_vec(&s.x_final),
    );
    let _ = writeln!(
        out,
        "config      eps={:e} delta={:e} Delta={:e} norm={:?}",
        c.eps, c.delta, c.cap, c.norm
    );
    if trace {
        trace_table(s, out);
    }
}

fn trace_table(s: &SolveReport, out: &mut String) {
    let _ = writeln!(
        out,
        "{:>5} {:>14} {:>12} {:>12} {:>10} {:>10} {:>4}",
        "k", "f", "grad", "gamma", "alpha", "cos", "rung"
    );
    for t in &s.trace {
        let _ = writeln!(
            out,
            "{:>5} {:>14.6e} {:>12.4e} {:>12.4e} {:>10.3e} {:>10.3e} {:>4}",
            t.k, t.f, t.grad_norm, t.gamma, t.alpha, t.cos_theta, t.rung
        );
    }
}

fn method_name(m: EigMethod) -> &'static str {
    match m {
        EigMethod::SphereCg => "sphere_cg",
        EigMethod::JacobiFallback => "jacobi_fallback",
    }
}

fn human_eig(r: &RunReport, out: &mut String) {
    let Payload::Eig(e) = &r.result else { return };
    for (label, est) in [("min", &e.min), ("max", &e.max)] {
        if let Some(est) = est {
            let _ = writeln!(
                out,
                "{label}  {:.14}  iterations {}  converged {}  method {}",
                est.value,
                est.iterations,
                est.converged,
                method_name(est.method)
            );
        }
    }
}

fn human_bench(r: &RunReport, out: &mut String) {
    let Payload::Bench(rows) = &r.result else {
        return;
    };
    let _ = writeln!(
        out,
        "{:<10} {:>4} {:>7} {:>14} {:>14}  status",
        "name", "dim", "iter", "obj", "grad_norm"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>4} {:>7} {:>14.6e} {:>14.6e}  {}",
            row.name,
            row.dim,
            row.iter,
            row.obj,
            row.grad_norm,
            status_name(row.status)
        );
    }
}

/// CSV bench table: `name,dim,iter,obj,grad_norm,status`.
pub fn bench_csv(r: &RunReport) -> String {
    let mut out = String::from("name,dim,iter,obj,grad_norm,status\n");
    if let Payload::Bench(rows) = &r.result {
        for SuiteRow {
            name,
            dim,
            iter,
            obj,
            grad_norm,
            status,
        } in rows
        {
            let _ = writeln!(
                out,
                "{name},{dim},{iter},{obj:e},{grad_norm:e},{}",
                status_name(*status)
            );
        }
    }
    out
}

fn human_check(r: &RunReport, out: &mut String) {
    let Payload::Check(rows) = &r.result else {
        return;
    };
    let show = |v: Option<f64>| v.map_or_else(|| "non-finite".to_owned(), |v| format!("{v:.3e}"));
    let _ = writeln!(out, "{}", r.config.problem.as_deref().unwrap_or("?"));
    for row in rows {
        let _ = writeln!(
            out,
            "  {}  grad {}  hess {}  {}",
            fmt_vec(&row.point),
            show(row.grad_error),
            show(row.hess_error),
            if row.passed { "ok" } else { "FAIL" }
        );
    }
}
