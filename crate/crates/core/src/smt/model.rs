use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::ir::{ParamKind, Program};
use crate::sim::StateVector;
use crate::testcase::{TestCase, Value};

/// Pre-normalization norm below which a model carries no usable state.
pub const MIN_MODEL_NORM: f64 = 1e-6;

/// Variable → closed interval; exact models use `lo == hi`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Assignment(pub BTreeMap<String, (f64, f64)>);

impl FromIterator<(String, (f64, f64))> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, (f64, f64))>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

impl Assignment {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.0.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, lo: f64, hi: f64) {
        self.0.insert(name.into(), (lo, hi));
    }

    pub fn midpoint(&self, name: &str) -> f64 {
        self.get(name).map_or(0.0, |(lo, hi)| lo + (hi - lo) / 2.0)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every interval grown to at least `radius` around its midpoint.
    pub fn widened(&self, radius: f64) -> Assignment {
        self.0
            .iter()
            .map(|(k, &(lo, hi))| {
                let mid = lo + (hi - lo) / 2.0;
                (k.clone(), (lo.min(mid - radius), hi.max(mid + radius)))
            })
            .collect()
    }

    pub fn restricted(&self, vars: &[String]) -> Assignment {
        self.0.iter().filter(|(k, _)| vars.contains(k)).map(|(k, v)| (k.clone(), *v)).collect()
    }

    /// Boxes overlap on every listed variable they both bound.
    pub fn intersects(&self, other: &Assignment, vars: &[String]) -> bool {
        vars.iter().all(|v| match (self.get(v), other.get(v)) {
            (Some((a, b)), Some((c, d))) => a <= d && c <= b,
            _ => true,
        })
    }

    /// Adds `[0, 0]` for every listed variable the model left out.
    pub fn fill_defaults<'a>(&mut self, vars: impl IntoIterator<Item = &'a str>) {
        for v in vars {
            self.0.entry(v.to_string()).or_insert((0.0, 0.0));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelDialect {
    /// `(define-fun v () Real 0.5)` as printed by Z3.
    DefineFun,
    /// `v : [lo, hi]` as printed by dReal.
    Interval,
}

/// Parses the model part of solver output. Verdict lines (`sat`,
/// `delta-sat with delta = …`) are skipped.
pub fn parse_model(stdout: &str, dialect: ModelDialect) -> Result<Assignment, SolverError> {
    match dialect {
        ModelDialect::Interval => parse_intervals(stdout),
        ModelDialect::DefineFun => parse_define_funs(stdout),
    }
}

fn is_verdict_line(l: &str) -> bool {
    matches!(l, "sat" | "unsat" | "unknown") || l.starts_with("delta-sat")
}

fn parse_intervals(stdout: &str) -> Result<Assignment, SolverError> {
    let mut a = Assignment::default();
    for (i, line) in stdout.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || is_verdict_line(l) {
            continue;
        }
        let bad = || SolverError::Parse { line: i + 1, text: line.to_string() };
        let (name, rest) = l.split_once(':').ok_or_else(bad)?;
        let inner = rest.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let (lo, hi) = finite_interval(lo, hi);
        if lo > hi {
            return Err(bad());
        }
        a.insert(name.trim(), lo, hi);
    }
    Ok(a)
}

fn finite_interval(lo: f64, hi: f64) -> (f64, f64) {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo),
        (false, true) => (hi, hi),
        (false, false) => (0.0, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, SolverError> {
    let mut stack: Vec<(Vec<Sexp>, usize)> = vec![(Vec::new(), 0)];
    let mut line = 1;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            '(' => stack.push((Vec::new(), line)),
            ')' => {
                let (items, start) = stack
                    .pop()
                    .filter(|_| !stack.is_empty())
                    .ok_or_else(|| SolverError::Parse { line, text: "unbalanced `)`".into() })?;
                stack.last_mut().unwrap().0.push(Sexp::List(items, start));
            }
            '"' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().0.push(Sexp::Atom(format!("\"{s}\""), line));
            }
            _ => {
                let mut s = c.to_string();
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().0.push(Sexp::Atom(s, line));
            }
        }
    }
    if stack.len() != 1 {
        return Err(SolverError::Parse { line, text: "unterminated `(`".into() });
    }
    Ok(stack.pop().unwrap().0)
}

fn bad_sexp(s: &Sexp, stdout: &str) -> SolverError {
    let line = s.line();
    SolverError::Parse { line, text: stdout.lines().nth(line.saturating_sub(1)).unwrap_or("").to_string() }
}

fn eval_value(s: &Sexp, stdout: &str) -> Result<f64, SolverError> {
    match s {
        Sexp::Atom(t, _) => t.trim_end_matches('?').parse().map_err(|_| bad_sexp(s, stdout)),
        Sexp::List(items, _) => {
            let Some(Sexp::Atom(op, _)) = items.first() else {
                return Err(bad_sexp(s, stdout));
            };
            let args = items[1..].iter().map(|a| eval_value(a, stdout)).collect::<Result<Vec<_>, _>>()?;
            match (op.as_str(), args.as_slice()) {
                ("-", [x]) => Ok(-x),
                ("-", [x, rest @ ..]) => Ok(rest.iter().fold(*x, |a, b| a - b)),
                ("+", _) => Ok(args.iter().sum()),
                ("*", _) => Ok(args.iter().product()),
                ("/", [a, b]) => Ok(a / b),
                ("to_real", [x]) => Ok(*x),
                _ => Err(bad_sexp(s, stdout)),
            }
        }
    }
}

fn parse_define_funs(stdout: &str) -> Result<Assignment, SolverError> {
    let mut a = Assignment::default();
    let body: String =
        stdout.lines().map(|l| if is_verdict_line(l.trim()) { "" } else { l }).collect::<Vec<_>>().join("\n");
    let mut pending = read_sexps(&body)?;
    while let Some(s) = pending.pop() {
        let Sexp::List(items, _) = &s else {
            return Err(bad_sexp(&s, stdout));
        };
        match items.first() {
            Some(Sexp::Atom(head, _)) if head == "define-fun" => {
                let (Some(Sexp::Atom(name, _)), Some(value)) = (items.get(1), items.get(4)) else {
                    return Err(bad_sexp(&s, stdout));
                };
                // Some solvers echo the document's own macro definitions.
                if name.starts_with("phi_") {
                    continue;
                }
                let v = eval_value(value, stdout)?;
                a.insert(name.clone(), v, v);
            }
            Some(Sexp::Atom(head, _)) if head == "model" => pending.extend(items[1..].iter().cloned()),
            Some(Sexp::Atom(head, _)) if head == "error" => {
                return Err(SolverError::Failed(format!("solver reported {}", sexp_text(&s))));
            }
            _ => pending.extend(items.iter().cloned()),
        }
    }
    Ok(a)
}

fn sexp_text(s: &Sexp) -> String {
    match s {
        Sexp::Atom(t, _) => t.clone(),
        Sexp::List(items, _) => format!("({})", items.iter().map(sexp_text).collect::<Vec<_>>().join(" ")),
    }
}

/// Interval midpoints as a test case, without renormalization.
pub fn extract_raw(a: &Assignment, p: &Program) -> Result<TestCase, SolverError> {
    let dim = 1usize << p.n();
    let amps: Vec<Complex64> = (0..dim)
        .map(|x| Complex64::new(a.midpoint(&format!("psi_0_{x}.r")), a.midpoint(&format!("psi_0_{x}.i"))))
        .collect();
    let initial_state = StateVector::from_amplitudes(amps).map_err(|e| SolverError::Failed(e.to_string()))?;
    let classical = p
        .classical_params()
        .map(|param| {
            let v = a.midpoint(&format!("{}_0", param.name));
            let value = match param.kind {
                ParamKind::Real => Value::Real(v),
                _ => Value::Int(v.round() as i64),
            };
            (param.name.clone(), value)
        })
        .collect();
    Ok(TestCase { classical, initial_state })
}

/// Midpoints, rounded classical values and a unit-norm initial state.
pub fn extract_test_case(a: &Assignment, p: &Program) -> Result<TestCase, SolverError> {
    let mut tc = extract_raw(a, p)?;
    let norm = tc.initial_state.norm_sqr().sqrt();
    tc.initial_state = tc.initial_state.normalized(MIN_MODEL_NORM).ok_or(SolverError::DegenerateModel(norm))?;
    Ok(tc)
}
