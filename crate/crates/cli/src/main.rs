//! `qconcolic`: concolic testing, benchmark generation, baseline comparison
//! and SMT inspection for `.qcp` programs.

mod compare;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use qconcolic_core::benchgen::{generate_suite, Scale, Structure};
use qconcolic_core::constraint::{negate, path_condition};
use qconcolic_core::driver::{run_concolic, Config, Report};
use qconcolic_core::smt::{emit_smt_with, SmtMode, SolverConfig, SolverKind, SubprocessSolver};
use qconcolic_core::symbolic::symbolize;
use qconcolic_core::{execute_concrete, parse_program, Program, TestCase};

/// Exit codes.
const EXIT_FULL: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_UNSAT: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qconcolic_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_ERROR,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "qconcolic", version, about = "Concolic testing for hybrid quantum-classical programs")]
struct Cli {
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explore a program and write a JSON report.
    Test(TestArgs),
    /// Generate a random benchmark suite.
    Bench(BenchArgs),
    /// Run concolic testing and baselines over a suite.
    Compare(compare::CompareArgs),
    /// Print the SMT-LIB2 query for one execution path.
    ShowSmt(ShowSmtArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Integrated,
    PerOp,
}

impl From<ModeArg> for SmtMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Integrated => SmtMode::Integrated,
            ModeArg::PerOp => SmtMode::PerOp,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Solver-targeted iterations.
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Executions per test case.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    #[arg(long, default_value_t = 0.05)]
    delta_sat: f64,
    /// Solver command template with {file}, {timeout} and {delta}.
    #[arg(long, env = "QCONCOLIC_SOLVER_CMD")]
    solver_cmd: Option<String>,
    /// Per-call solver timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Integrated)]
    smt_mode: ModeArg,
    /// Omit `(set-logic …)` from emitted queries.
    #[arg(long)]
    no_logic: bool,
    /// Re-solves with an exclusion before giving up on a branch.
    #[arg(long, default_value_t = 5)]
    max_refinements: usize,
}

impl EngineArgs {
    fn config(&self) -> Config {
        let mut solver = match &self.solver_cmd {
            Some(cmd) => SolverConfig::with_command(cmd.clone()),
            None => SolverConfig::default(),
        };
        solver.timeout_secs = self.timeout;
        solver.delta = self.delta_sat;
        Config {
            max_iters: self.max_iters,
            repeats: self.repeats as usize,
            solver,
            seed: self.seed,
            smt_mode: self.smt_mode.into(),
            emit_logic: !self.no_logic,
            max_refinements: self.max_refinements,
            ..Config::default()
        }
    }
}

#[derive(Debug, Args)]
struct TestArgs {
    program: PathBuf,
    #[command(flatten)]
    engine: EngineArgs,
    /// Stop once all of these return values were seen (comma separated).
    #[arg(long, value_delimiter = ',')]
    expect_results: Option<Vec<i64>>,
    /// Report path; defaults to `<report-dir>/<program>.report.json`.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, env = "QCONCOLIC_REPORT_DIR", default_value = ".")]
    report_dir: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=4))]
    qubits: u64,
    #[arg(long)]
    scale: Scale,
    /// Cycle through all structures when omitted.
    #[arg(long)]
    structure: Option<Structure>,
    #[arg(long, default_value_t = 40)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "suite")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ShowSmtArgs {
    program: PathBuf,
    /// Test case JSON; the all-zero input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Seed for measurement sampling along the path.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Negate the atom at this step and drop later ones.
    #[arg(long)]
    flip: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::Integrated)]
    mode: ModeArg,
    /// Solver whose power syntax to use.
    #[arg(long, value_enum, default_value_t = SolverArg::Z3)]
    dialect: SolverArg,
    #[arg(long)]
    no_logic: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Z3,
    Dreal,
}

pub fn load_program(path: &Path) -> CliResult<Program> {
    let src = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(parse_program(&src).map_err(qconcolic_core::Error::from)?)
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Exit status for a finished exploration.
pub fn exit_code(rep: &Report) -> u8 {
    if !rep.unsat_branches.is_empty() {
        EXIT_UNSAT
    } else if rep.coverage.feasible_ratio >= 1.0 {
        EXIT_FULL
    } else {
        EXIT_PARTIAL
    }
}

fn cmd_test(args: &TestArgs) -> CliResult<u8> {
    let p = load_program(&args.program)?;
    let mut cfg = args.engine.config();
    cfg.expected_results = args.expect_results.as_ref().map(|v| v.iter().copied().collect::<BTreeSet<_>>());
    let solver = SubprocessSolver::new(cfg.solver.clone());
    let rep = run_concolic(&p, &cfg, &solver)?;
    let path = args.report.clone().unwrap_or_else(|| args.report_dir.join(format!("{}.report.json", p.name)));
    write_file(&path, &rep.to_json())?;
    println!(
        "{}: coverage {}/{} ({:.1}%), feasible {:.1}%, {} test cases, {} iterations, {:?}",
        p.name,
        rep.coverage.covered.len(),
        rep.coverage.total,
        rep.coverage.ratio * 100.0,
        rep.coverage.feasible_ratio * 100.0,
        rep.cases.len(),
        rep.iterations,
        rep.termination
    );
    for b in &rep.unsat_branches {
        let site = &p.branch_sites[b.site];
        println!(
            "unsat branch: site {} ({}) polarity {} at line {}",
            b.site,
            cond_summary(&p, b.site),
            b.polarity,
            site.span.line
        );
    }
    println!("report: {}", path.display());
    Ok(exit_code(&rep))
}

fn cond_summary(p: &Program, site: usize) -> String {
    p.cond(site).map(|c| qconcolic_core::ir::cond_text(c, p.qreg_name())).unwrap_or_default()
}

fn cmd_bench(args: &BenchArgs) -> CliResult<u8> {
    let (files, manifest) = generate_suite(args.qubits as usize, args.scale, args.structure, args.count, args.seed);
    fs::create_dir_all(&args.out).map_err(|source| CliError::Io { path: args.out.clone(), source })?;
    for (name, src) in &files {
        write_file(&args.out.join(name), src)?;
    }
    let text = serde_json::to_string_pretty(&manifest).map_err(qconcolic_core::Error::from)?;
    write_file(&args.out.join("manifest.json"), &text)?;
    println!("wrote {} programs and manifest.json to {}", files.len(), args.out.display());
    Ok(EXIT_FULL)
}

fn cmd_show_smt(args: &ShowSmtArgs) -> CliResult<u8> {
    let p = load_program(&args.program)?;
    let tc = match &args.input {
        Some(path) => TestCase::load(path)?
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Usage(format!("{}: no test case", path.display())))?,
        None => TestCase::initial(&p).map_err(qconcolic_core::Error::from)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let exec = execute_concrete(&p, &tc, &mut rng).map_err(qconcolic_core::Error::from)?;
    let mut pc = path_condition(&p, &symbolize(&p), &exec.trace).map_err(qconcolic_core::Error::from)?;
    if let Some(k) = args.flip {
        if k >= pc.atoms.len() {
            return Err(CliError::Usage(format!("--flip {k}: path has {} conditionals", pc.atoms.len())));
        }
        pc.atoms.truncate(k + 1);
        pc.atoms[k] = negate(&pc.atoms[k]);
    }
    let kind = match args.dialect {
        SolverArg::Z3 => SolverKind::Z3,
        SolverArg::Dreal => SolverKind::DReal,
    };
    let doc = emit_smt_with(&pc, p.n(), kind.emit_options(args.mode.into(), !args.no_logic));
    print!("; path: {pc}\n{}", doc.to_smtlib());
    Ok(EXIT_FULL)
}

fn run(cli: Cli) -> CliResult<u8> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Compare(a) => compare::cmd_compare(a),
        Command::ShowSmt(a) => cmd_show_smt(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_FULL };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
