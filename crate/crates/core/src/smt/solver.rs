use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::emit::{EmitOptions, PowerStyle, SmtDocument, SmtMode};
use super::model::{parse_model, Assignment, ModelDialect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    #[default]
    Z3,
    DReal,
}

impl SolverKind {
    pub fn default_command(self) -> &'static str {
        match self {
            SolverKind::Z3 => "z3 -T:{timeout} pp.decimal=true pp.decimal_precision=20 {file}",
            SolverKind::DReal => "dreal --precision {delta} --model {file}",
        }
    }

    pub fn power_style(self) -> PowerStyle {
        match self {
            SolverKind::Z3 => PowerStyle::Product,
            SolverKind::DReal => PowerStyle::Caret,
        }
    }

    pub fn emit_options(self, mode: SmtMode, logic: bool) -> EmitOptions {
        EmitOptions { mode, power: self.power_style(), logic, nlsat_for_ints: self == SolverKind::Z3 }
    }

    /// Guesses the solver from a command template.
    pub fn detect(command: &str) -> SolverKind {
        let program = command.split_whitespace().next().unwrap_or("");
        if program.rsplit('/').next().unwrap_or("").starts_with("dreal") {
            SolverKind::DReal
        } else {
            SolverKind::Z3
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Template with `{file}`, `{timeout}` (whole seconds) and `{delta}`
    /// placeholders; split on whitespace. `None` uses the kind's default.
    pub command: Option<String>,
    pub timeout_secs: f64,
    pub delta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { kind: SolverKind::Z3, command: None, timeout_secs: 60.0, delta: 0.05 }
    }
}

impl SolverConfig {
    /// Config for a command template, inferring the solver kind.
    pub fn with_command(command: impl Into<String>) -> Self {
        let command = command.into();
        SolverConfig { kind: SolverKind::detect(&command), command: Some(command), ..Self::default() }
    }

    pub fn template(&self) -> &str {
        self.command.as_deref().unwrap_or(self.kind.default_command())
    }

    pub fn argv(&self, file: &str) -> Vec<String> {
        let secs = self.timeout_secs.ceil().max(1.0) as u64;
        self.template()
            .split_whitespace()
            .map(|w| {
                w.replace("{file}", file)
                    .replace("{timeout}", &secs.to_string())
                    .replace("{delta}", &self.delta.to_string())
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "model", rename_all = "kebab-case")]
pub enum SolverVerdict {
    Sat(Assignment),
    DeltaSat(Assignment),
    Unsat,
    Timeout,
    SolverError(String),
}

impl SolverVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            SolverVerdict::Sat(_) => "sat",
            SolverVerdict::DeltaSat(_) => "delta-sat",
            SolverVerdict::Unsat => "unsat",
            SolverVerdict::Timeout => "timeout",
            SolverVerdict::SolverError(_) => "error",
        }
    }

    pub fn model(&self) -> Option<&Assignment> {
        match self {
            SolverVerdict::Sat(a) | SolverVerdict::DeltaSat(a) => Some(a),
            _ => None,
        }
    }
}

pub trait Solver: Send + Sync {
    fn solve(&self, doc: &SmtDocument) -> SolverVerdict;
}

impl<F> Solver for F
where
    F: Fn(&SmtDocument) -> SolverVerdict + Send + Sync,
{
    fn solve(&self, doc: &SmtDocument) -> SolverVerdict {
        self(doc)
    }
}

/// Runs an external solver on a temporary `.smt2` file.
#[derive(Debug, Clone, Default)]
pub struct SubprocessSolver {
    pub config: SolverConfig,
}

impl SubprocessSolver {
    pub fn new(config: SolverConfig) -> Self {
        SubprocessSolver { config }
    }
}

impl Solver for SubprocessSolver {
    fn solve(&self, doc: &SmtDocument) -> SolverVerdict {
        invoke_solver(doc, &self.config)
    }
}

/// Extra wall-clock allowance beyond the solver's own time limit.
const GRACE: Duration = Duration::from_secs(2);

pub fn invoke_solver(doc: &SmtDocument, cfg: &SolverConfig) -> SolverVerdict {
    let mut verdict = match run(doc, cfg) {
        Ok(Some((stdout, stderr, ok))) => classify(&stdout, &stderr, ok),
        Ok(None) => SolverVerdict::Timeout,
        Err(e) => SolverVerdict::SolverError(e),
    };
    if let SolverVerdict::Sat(a) | SolverVerdict::DeltaSat(a) = &mut verdict {
        a.fill_defaults(doc.initial_vars.iter().map(String::as_str));
        a.fill_defaults(doc.classical_vars.iter().map(|d| d.name.as_str()));
    }
    verdict
}

type Output = (String, String, bool);

fn run(doc: &SmtDocument, cfg: &SolverConfig) -> Result<Option<Output>, String> {
    let mut file = tempfile::Builder::new().suffix(".smt2").tempfile().map_err(|e| e.to_string())?;
    file.write_all(doc.to_smtlib().as_bytes()).map_err(|e| e.to_string())?;
    file.flush().map_err(|e| e.to_string())?;
    let argv = cfg.argv(&file.path().to_string_lossy());
    let (program, args) = argv.split_first().ok_or("empty solver command")?;
    log::debug!("solver: {}", argv.join(" "));
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot start `{program}`: {e}"))?;

    let drain = |mut r: Box<dyn Read + Send>| {
        thread::spawn(move || {
            let mut s = String::new();
            let _ = r.read_to_string(&mut s);
            s
        })
    };
    let out = drain(Box::new(child.stdout.take().expect("piped stdout")));
    let err = drain(Box::new(child.stderr.take().expect("piped stderr")));

    let deadline = Instant::now() + Duration::from_secs_f64(cfg.timeout_secs.max(0.0)) + GRACE;
    let status = loop {
        match child.try_wait().map_err(|e| e.to_string())? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(None);
            }
            None => thread::sleep(Duration::from_millis(5)),
        }
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    Ok(Some((stdout, stderr, status.success())))
}

/// Maps raw solver output to a verdict.
pub fn classify(stdout: &str, stderr: &str, success: bool) -> SolverVerdict {
    let first = stdout.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let parsed = |dialect| match parse_model(stdout, dialect) {
        Ok(a) => Ok(a),
        Err(e) => Err(SolverVerdict::SolverError(e.to_string())),
    };
    match first {
        "unsat" => SolverVerdict::Unsat,
        "unknown" | "timeout" => SolverVerdict::Timeout,
        "sat" => {
            let dialect = if stdout.contains("define-fun") { ModelDialect::DefineFun } else { ModelDialect::Interval };
            parsed(dialect).map_or_else(|e| e, SolverVerdict::Sat)
        }
        l if l.starts_with("delta-sat") => parsed(ModelDialect::Interval).map_or_else(|e| e, SolverVerdict::DeltaSat),
        l => {
            let detail = if stderr.trim().is_empty() { l } else { stderr.trim() };
            let status = if success { "unrecognized output" } else { "solver failed" };
            SolverVerdict::SolverError(format!("{status}: {detail}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(classify("unsat\n", "", true), SolverVerdict::Unsat);
        assert_eq!(classify("unknown\n", "", true), SolverVerdict::Timeout);
        assert_eq!(classify("timeout\n", "", false), SolverVerdict::Timeout);
        let SolverVerdict::DeltaSat(a) = classify("delta-sat with delta = 0.05\nx : [0.5, 0.6]\n", "", true) else {
            panic!()
        };
        assert_eq!(a.get("x"), Some((0.5, 0.6)));
        let SolverVerdict::Sat(a) = classify("sat\n(\n  (define-fun x () Real\n    0.25)\n)\n", "", true) else {
            panic!()
        };
        assert_eq!(a.get("x"), Some((0.25, 0.25)));
        assert!(matches!(classify("", "segfault", false), SolverVerdict::SolverError(m) if m.contains("segfault")));
        assert!(matches!(classify("sat\n(define-fun", "", true), SolverVerdict::SolverError(_)));
    }

    #[test]
    fn command_templates() {
        let cfg = SolverConfig { timeout_secs: 2.5, ..SolverConfig::default() };
        assert_eq!(
            cfg.argv("/tmp/a.smt2"),
            ["z3", "-T:3", "pp.decimal=true", "pp.decimal_precision=20", "/tmp/a.smt2"]
        );
        let d = SolverConfig::with_command("/opt/bin/dreal --precision {delta} {file}");
        assert_eq!(d.kind, SolverKind::DReal);
        assert_eq!(d.argv("f"), ["/opt/bin/dreal", "--precision", "0.05", "f"]);
    }

    #[test]
    fn missing_binary_is_an_error() {
        let cfg = SolverConfig::with_command("/nonexistent/solver {file}");
        let doc = super::super::emit_smt(&Default::default(), 1, super::super::SmtMode::Integrated);
        assert!(matches!(invoke_solver(&doc, &cfg), SolverVerdict::SolverError(m) if m.contains("cannot start")));
    }

    #[test]
    fn wall_clock_timeout() {
        let cfg =
            SolverConfig { command: Some("sleep 30 {file}".into()), timeout_secs: 0.0, ..SolverConfig::default() };
        let doc = super::super::emit_smt(&Default::default(), 1, super::super::SmtMode::Integrated);
        let start = Instant::now();
        // `sleep` rejects the file argument quickly on some platforms; either
        // way it must not hang past the grace period.
        let v = invoke_solver(&doc, &cfg);
        assert!(start.elapsed() < GRACE + Duration::from_secs(2));
        assert!(matches!(v, SolverVerdict::Timeout | SolverVerdict::SolverError(_)));
    }
}
