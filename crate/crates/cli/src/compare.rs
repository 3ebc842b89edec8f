use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qconcolic_core::benchgen::{run_baseline, BaselineGen, Manifest, DEFAULT_CIRCUIT_DEPTH};
use qconcolic_core::driver::{run_concolic, Report};
use qconcolic_core::smt::SubprocessSolver;

use crate::{load_program, write_file, CliError, CliResult, EngineArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Vector,
    Circuit,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory holding `manifest.json` and the programs.
    suite: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "vector,circuit")]
    baselines: Vec<BaselineArg>,
    /// Random inputs per baseline and program.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    /// Gate layers for the circuit baseline.
    #[arg(long, default_value_t = DEFAULT_CIRCUIT_DEPTH)]
    depth: usize,
    /// Skip the concolic run.
    #[arg(long)]
    no_concolic: bool,
    /// Comparison JSON; defaults to `<suite>/comparison.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep every per-program report in the comparison file.
    #[arg(long)]
    full_reports: bool,
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub coverage: f64,
    pub feasible_coverage: f64,
    pub quality: Option<f64>,
    pub cases: usize,
    pub unsat_branches: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
}

impl MethodResult {
    fn from_report(rep: Report, keep: bool) -> Self {
        MethodResult {
            method: rep.method.clone(),
            coverage: rep.coverage.ratio,
            feasible_coverage: rep.coverage.feasible_ratio,
            quality: rep.mean_quality(),
            cases: rep.cases.len(),
            unsat_branches: rep.unsat_branches.len(),
            report: keep.then_some(rep),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProgramRow {
    pub file: String,
    pub methods: Vec<MethodResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub mean_coverage: f64,
    /// Mean over programs that produced at least one quality entry.
    pub mean_quality: Option<f64>,
    pub full_coverage: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub tool_version: String,
    pub suite: String,
    pub budget: usize,
    pub programs: Vec<ProgramRow>,
    pub aggregate: Vec<Aggregate>,
}

fn gen_for(b: BaselineArg, depth: usize) -> BaselineGen {
    match b {
        BaselineArg::Vector => BaselineGen::Vector,
        BaselineArg::Circuit => BaselineGen::Circuit { depth },
    }
}

fn compare_one(args: &CompareArgs, index: usize, file: &str) -> CliResult<ProgramRow> {
    let p = load_program(&args.suite.join(file))?;
    let mut methods = Vec::new();
    if !args.no_concolic {
        let cfg = args.engine.config();
        let solver = SubprocessSolver::new(cfg.solver.clone());
        methods.push(MethodResult::from_report(run_concolic(&p, &cfg, &solver)?, args.full_reports));
    }
    for &b in &args.baselines {
        let mut rng = ChaCha8Rng::seed_from_u64(args.engine.seed);
        rng.set_stream(index as u64);
        let rep = run_baseline(&p, gen_for(b, args.depth), args.budget, args.engine.repeats as usize, &mut rng)?;
        methods.push(MethodResult::from_report(rep, args.full_reports));
    }
    log::info!("{file}: done");
    Ok(ProgramRow { file: file.to_string(), methods })
}

fn aggregate(rows: &[ProgramRow]) -> Vec<Aggregate> {
    let Some(first) = rows.first() else { return Vec::new() };
    (0..first.methods.len())
        .map(|k| {
            let col: Vec<&MethodResult> = rows.iter().map(|r| &r.methods[k]).collect();
            let qs: Vec<f64> = col.iter().filter_map(|m| m.quality).collect();
            Aggregate {
                method: col[0].method.clone(),
                mean_coverage: col.iter().map(|m| m.coverage).sum::<f64>() / col.len() as f64,
                mean_quality: (!qs.is_empty()).then(|| qs.iter().sum::<f64>() / qs.len() as f64),
                full_coverage: col.iter().filter(|m| m.coverage >= 1.0).count(),
            }
        })
        .collect()
}

fn fmt_quality(q: Option<f64>) -> String {
    q.map_or_else(|| "-".into(), |q| format!("{q:.4}"))
}

pub fn render_table(c: &Comparison) -> String {
    let mut out = String::new();
    let Some(first) = c.programs.first() else {
        return "no programs\n".into();
    };
    let width = c.programs.iter().map(|r| r.file.len()).max().unwrap_or(7).max(7);
    let _ = write!(out, "{:<width$}", "program");
    for m in &first.methods {
        let _ = write!(out, "  {:>10} {:>10}", format!("{}.cov", m.method), format!("{}.q", m.method));
    }
    out.push('\n');
    for r in &c.programs {
        let _ = write!(out, "{:<width$}", r.file);
        for m in &r.methods {
            let _ = write!(out, "  {:>10.3} {:>10}", m.coverage, fmt_quality(m.quality));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<width$}", "mean");
    for a in &c.aggregate {
        let _ = write!(out, "  {:>10.3} {:>10}", a.mean_coverage, fmt_quality(a.mean_quality));
    }
    out.push('\n');
    let _ = write!(out, "{:<width$}", "full");
    for a in &c.aggregate {
        let _ = write!(out, "  {:>10} {:>10}", format!("{}/{}", a.full_coverage, c.programs.len()), "");
    }
    out.push('\n');
    out
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<u8> {
    let manifest_path = args.suite.join("manifest.json");
    let text =
        fs::read_to_string(&manifest_path).map_err(|e| CliError::Usage(format!("{}: {e}", manifest_path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", manifest_path.display())))?;
    let programs = manifest
        .programs
        .par_iter()
        .enumerate()
        .map(|(i, entry)| compare_one(args, i, &entry.file))
        .collect::<CliResult<Vec<_>>>()?;
    let comparison = Comparison {
        schema_version: qconcolic_core::driver::SCHEMA_VERSION,
        tool_version: qconcolic_core::driver::tool_version(),
        suite: args.suite.display().to_string(),
        budget: args.budget,
        aggregate: aggregate(&programs),
        programs,
    };
    print!("{}", render_table(&comparison));
    let out = args.out.clone().unwrap_or_else(|| args.suite.join("comparison.json"));
    let json = serde_json::to_string_pretty(&comparison).map_err(qconcolic_core::Error::from)?;
    write_file(&out, &json)?;
    println!("comparison: {}", out.display());
    Ok(0)
}
