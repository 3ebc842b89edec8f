use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::model::Assignment;
use crate::constraint::{Atom, AtomKind, AtomParams, PathConstraint};
use crate::ir::{BinOp, Cmp, Expr, GateOp};
use crate::symbolic::embed_gate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmtMode {
    /// Only the initial amplitudes are declared; later amplitudes are
    /// `define-fun` linear forms through the integrated unitary.
    #[default]
    Integrated,
    /// One variable set per gate step, linked by linear equalities.
    PerOp,
}

/// How squares are written: `(^ v 2.0)` or `(* v v)`. Z3 rejects `^` on
/// reals in QF_NRA, dReal accepts both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerStyle {
    Caret,
    #[default]
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitOptions {
    pub mode: SmtMode,
    pub power: PowerStyle,
    /// Emit `(set-logic …)`.
    pub logic: bool,
    /// With integer symbols, check with z3's `qfnra-nlsat` tactic; its
    /// default mixed-integer strategy stalls on these queries.
    #[serde(default)]
    pub nlsat_for_ints: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { mode: SmtMode::Integrated, power: PowerStyle::Product, logic: true, nlsat_for_ints: false }
    }
}

/// Declared variable with its sort.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declared {
    pub name: String,
    pub int: bool,
}

/// An SMT-LIB2 query laid out in five fixed sections plus appended exclusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmtDocument {
    pub n: usize,
    pub logic: Option<String>,
    pub declarations: Vec<String>,
    pub normalization: Vec<String>,
    pub operations: Vec<String>,
    pub conditions: Vec<String>,
    pub exclusions: Vec<String>,
    /// `psi_0_<x>.r` then `psi_0_<x>.i` for every basis index.
    pub initial_vars: Vec<String>,
    pub classical_vars: Vec<Declared>,
    /// Boxes already excluded, for the monotonicity check.
    pub excluded: Vec<Assignment>,
    pub check_sat: String,
}

impl SmtDocument {
    pub fn to_smtlib(&self) -> String {
        let mut out = String::new();
        if let Some(l) = &self.logic {
            let _ = writeln!(out, "(set-logic {l})");
        }
        let sections: [(&str, &[String]); 4] = [
            ("variable declarations", &self.declarations),
            ("normalization", &self.normalization),
            ("operations", &self.operations),
            ("conditions", &self.conditions),
        ];
        for (i, (title, lines)) in sections.iter().enumerate() {
            let _ = writeln!(out, "; ({}) {title}", i + 1);
            for l in lines.iter() {
                out.push_str(l);
                out.push('\n');
            }
        }
        for l in &self.exclusions {
            out.push_str(l);
            out.push('\n');
        }
        let _ = write!(out, "; (5) commands\n{}\n(get-model)\n", self.check_sat);
        out
    }

    pub fn declared_reals(&self) -> usize {
        self.declarations.iter().filter(|d| d.ends_with("() Real)")).count()
    }

    /// Appends `⋁_v (v < lo_v ∨ v > hi_v)` over the initial variables. An
    /// assignment with no initial variable leaves the document unchanged.
    pub fn add_exclusion(&self, a: &Assignment) -> SmtDocument {
        let terms: Vec<String> = self
            .initial_vars
            .iter()
            .filter_map(|v| a.get(v).map(|(lo, hi)| format!("(< {v} {}) (> {v} {})", real(lo), real(hi))))
            .collect();
        if terms.is_empty() {
            log::warn!("ignoring exclusion of an empty assignment");
            return self.clone();
        }
        let mut next = self.clone();
        next.exclusions.push(format!("(assert (or {}))", terms.join(" ")));
        next.excluded.push(a.restricted(&self.initial_vars));
        next
    }

    /// True when `a` overlaps a box excluded earlier.
    pub fn is_excluded(&self, a: &Assignment) -> bool {
        self.excluded.iter().any(|ex| ex.intersects(a, &self.initial_vars))
    }
}

/// Decimal literal with 17 significant digits, no exponent; negatives as
/// `(- x)`.
pub fn real(v: f64) -> String {
    let text = plain_decimal(v.abs());
    if v < 0.0 && text != "0.0" {
        format!("(- {text})")
    } else {
        text
    }
}

fn plain_decimal(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0.0".into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exp + 1;
    let (int, frac) = if point <= 0 {
        ("0".to_string(), format!("{}{digits}", "0".repeat((-point) as usize)))
    } else if point as usize >= digits.len() {
        (format!("{digits}{}", "0".repeat(point as usize - digits.len())), String::new())
    } else {
        (digits[..point as usize].to_string(), digits[point as usize..].to_string())
    };
    let frac = frac.trim_end_matches('0');
    format!("{int}.{}", if frac.is_empty() { "0" } else { frac })
}

fn var(step: usize, x: usize, imag: bool) -> String {
    format!("psi_{step}_{x}.{}", if imag { 'i' } else { 'r' })
}

fn square(v: &str, style: PowerStyle) -> String {
    match style {
        PowerStyle::Caret => format!("(^ {v} 2.0)"),
        PowerStyle::Product => format!("(* {v} {v})"),
    }
}

struct Emitter {
    n: usize,
    opts: EmitOptions,
}

impl Emitter {
    fn dim(&self) -> usize {
        1 << self.n
    }

    /// Amplitude `x` after `k` gates, real or imaginary part.
    fn amp(&self, k: usize, x: usize, imag: bool) -> String {
        match self.opts.mode {
            SmtMode::PerOp => var(k, x, imag),
            SmtMode::Integrated if k == 0 => var(0, x, imag),
            SmtMode::Integrated => format!("phi_{k}_{x}.{}", if imag { 'i' } else { 'r' }),
        }
    }

    fn prob(&self, k: usize, x: usize) -> String {
        format!(
            "(+ {} {})",
            square(&self.amp(k, x, false), self.opts.power),
            square(&self.amp(k, x, true), self.opts.power)
        )
    }

    /// Linear form over the initial variables.
    fn linear(&self, row: &[f64]) -> String {
        let dim = self.dim();
        let terms: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| {
                let v = if j < dim { var(0, j, false) } else { var(0, j - dim, true) };
                if c == 1.0 {
                    v
                } else {
                    format!("(* {} {v})", real(c))
                }
            })
            .collect();
        if terms.is_empty() {
            "0.0".into()
        } else {
            format!("(+ 0.0 {})", terms.join(" "))
        }
    }

    fn integrated_defs(&self, atoms: &[Atom]) -> Vec<String> {
        let mut done = BTreeSet::new();
        let mut out = Vec::new();
        for a in atoms.iter().filter(|a| a.is_quantum() && a.prefix_len() > 0) {
            let k = a.prefix_len();
            if !done.insert(k) {
                continue;
            }
            for x in 0..self.dim() {
                for (imag, row) in [(false, &a.exprs.real[x]), (true, &a.exprs.imag[x])] {
                    out.push(format!("(define-fun {} () Real {})", self.amp(k, x, imag), self.linear(row)));
                }
            }
        }
        out
    }

    /// `ψ_{k+1} = U_k ψ_k` split into real and imaginary equalities.
    fn per_op_links(&self, ops: &[GateOp]) -> Vec<String> {
        let mut out = Vec::new();
        for (k, op) in ops.iter().enumerate() {
            let u = embed_gate(op, self.n);
            for x in 0..self.dim() {
                let mut re_terms = Vec::new();
                let mut im_terms = Vec::new();
                for j in 0..self.dim() {
                    let e = u.entry(x, j);
                    if e.norm() == 0.0 {
                        continue;
                    }
                    let (r, i) = (var(k, j, false), var(k, j, true));
                    re_terms.push(format!("(- (* {} {r}) (* {} {i}))", real(e.re), real(e.im)));
                    im_terms.push(format!("(+ (* {} {r}) (* {} {i}))", real(e.im), real(e.re)));
                }
                for (imag, terms) in [(false, re_terms), (true, im_terms)] {
                    out.push(format!("(assert (= (+ 0.0 {}) {}))", terms.join(" "), var(k + 1, x, imag)));
                }
            }
        }
        out
    }

    fn atom(&self, a: &Atom) -> String {
        let k = a.prefix_len();
        let body = match &a.params {
            AtomParams::Measure { .. } => {
                let eqs: Vec<String> = a
                    .zeroed_amplitudes()
                    .into_iter()
                    .flat_map(|x| [false, true].map(|imag| format!("(= {} 0.0)", self.amp(k, x, imag))))
                    .collect();
                junction("and", eqs)
            }
            AtomParams::Dist { target, delta, .. } => {
                let parts: Vec<String> = (0..self.dim())
                    .map(|x| {
                        let diff = format!("(- {} {})", self.prob(k, x), real(target[x]));
                        if a.kind == AtomKind::DistEq {
                            format!("(and (< {diff} {}) (> {diff} {}))", real(*delta), real(-delta))
                        } else {
                            format!("(or (>= {diff} {}) (<= {diff} {}))", real(*delta), real(-delta))
                        }
                    })
                    .collect();
                junction(if a.kind == AtomKind::DistEq { "and" } else { "or" }, parts)
            }
            AtomParams::Bound { pairs, conjunctive } => {
                let rel = if a.kind == AtomKind::ProbGt { ">" } else { "<=" };
                let parts: Vec<String> =
                    pairs.iter().map(|&(_, x, b)| format!("({rel} {} {})", self.prob(k, x), real(b))).collect();
                junction(if *conjunctive { "and" } else { "or" }, parts)
            }
            AtomParams::Classical { lhs, cmp, rhs, .. } => {
                let (l, r) = (expr(lhs), expr(rhs));
                match cmp {
                    Cmp::Eq => format!("(= {l} {r})"),
                    Cmp::Ne => format!("(not (= {l} {r}))"),
                    Cmp::Lt => format!("(< {l} {r})"),
                    Cmp::Le => format!("(<= {l} {r})"),
                    Cmp::Gt => format!("(> {l} {r})"),
                    Cmp::Ge => format!("(>= {l} {r})"),
                }
            }
        };
        format!("(assert {body})")
    }
}

fn junction(op: &str, parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".into(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("({op} {})", parts.join(" ")),
    }
}

fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) if *v < 0 => format!("(- {})", v.unsigned_abs()),
        Expr::Int(v) => v.to_string(),
        Expr::Real(v) => real(*v),
        Expr::Var(name) => name.clone(),
        Expr::Neg(inner) => format!("(- {})", expr(inner)),
        Expr::Bin(op, l, r) => {
            let sym = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
            };
            format!("({sym} {} {})", expr(l), expr(r))
        }
    }
}

/// Emits with default options in the given mode.
pub fn emit_smt(pc: &PathConstraint, n: usize, mode: SmtMode) -> SmtDocument {
    emit_smt_with(pc, n, EmitOptions { mode, ..EmitOptions::default() })
}

pub fn emit_smt_with(pc: &PathConstraint, n: usize, opts: EmitOptions) -> SmtDocument {
    let em = Emitter { n, opts };
    let dim = em.dim();

    let mut classical: Vec<Declared> = Vec::new();
    for a in &pc.atoms {
        if let AtomParams::Classical { symbols, .. } = &a.params {
            for s in symbols {
                if !classical.iter().any(|d| d.name == s.symbol) {
                    classical.push(Declared { name: s.symbol.clone(), int: !s.real });
                }
            }
        }
    }

    let longest = pc.atoms.iter().filter(|a| a.is_quantum()).max_by_key(|a| a.prefix_len());
    let ops: &[GateOp] = longest.map(|a| a.ops.as_slice()).unwrap_or(&[]);
    let steps = match opts.mode {
        SmtMode::PerOp => ops.len(),
        SmtMode::Integrated => 0,
    };

    let mut declarations = Vec::new();
    let mut initial_vars = Vec::new();
    for k in 0..=steps {
        for x in 0..dim {
            for imag in [false, true] {
                let v = var(k, x, imag);
                declarations.push(format!("(declare-fun {v} () Real)"));
                if k == 0 {
                    initial_vars.push(v);
                }
            }
        }
    }
    for d in &classical {
        declarations.push(format!("(declare-fun {} () {})", d.name, if d.int { "Int" } else { "Real" }));
    }

    let squares: Vec<String> = initial_vars.iter().map(|v| square(v, opts.power)).collect();
    let normalization = vec![format!("(assert (= (+ 0.0 {}) 1.0))", squares.join(" "))];

    let operations = match opts.mode {
        SmtMode::PerOp => em.per_op_links(ops),
        SmtMode::Integrated => em.integrated_defs(&pc.atoms),
    };
    let conditions = pc.atoms.iter().map(|a| em.atom(a)).collect();

    let has_int = classical.iter().any(|d| d.int);
    let check_sat =
        if has_int && opts.nlsat_for_ints { "(check-sat-using qfnra-nlsat)" } else { "(check-sat)" }.to_string();
    let logic = opts.logic.then(|| if has_int { "QF_NIRA".to_string() } else { "QF_NRA".to_string() });

    SmtDocument {
        n,
        logic,
        declarations,
        normalization,
        operations,
        conditions,
        exclusions: Vec::new(),
        initial_vars,
        classical_vars: classical,
        excluded: Vec::new(),
        check_sat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{measure_constraint, AtomSite};
    use crate::ir::Gate;
    use crate::symbolic::amplitude_exprs_at;

    fn measure_pc(ops: &[GateOp]) -> PathConstraint {
        let at = AtomSite { site: 0, ops, exprs: amplitude_exprs_at(ops, 2), object: "sqc" };
        PathConstraint { atoms: vec![measure_constraint(at, &[1], &["0".into()], true).unwrap()] }
    }

    #[test]
    fn literals() {
        assert_eq!(real(1.0), "1.0");
        assert_eq!(real(0.0), "0.0");
        assert_eq!(real(-0.0), "0.0");
        assert_eq!(real(0.5), "0.5");
        assert_eq!(real(-0.25), "(- 0.25)");
        assert_eq!(real(std::f64::consts::FRAC_1_SQRT_2), "0.70710678118654757");
        assert_eq!(real(1e-5), "0.000010000000000000001");
        assert_eq!(real(1234.5), "1234.5");
        assert_eq!(real(1e20), "100000000000000000000.0");
    }

    #[test]
    fn integrated_declares_only_initial_reals() {
        let ops = [GateOp::new(Gate::X, &[1]), GateOp::new(Gate::Z, &[1]), GateOp::new(Gate::H, &[1])];
        let doc = emit_smt(&measure_pc(&ops), 2, SmtMode::Integrated);
        assert_eq!(doc.declared_reals(), 8);
        assert_eq!(doc.logic.as_deref(), Some("QF_NRA"));
        let text = doc.to_smtlib();
        assert!(text.contains("(define-fun phi_3_2.r () Real"));
        assert!(text.ends_with("(check-sat)\n(get-model)\n"));
        assert_eq!(text, emit_smt(&measure_pc(&ops), 2, SmtMode::Integrated).to_smtlib());
    }

    #[test]
    fn per_op_declares_every_step() {
        let ops = [GateOp::new(Gate::X, &[1]), GateOp::new(Gate::Z, &[1]), GateOp::new(Gate::H, &[1])];
        let doc = emit_smt(&measure_pc(&ops), 2, SmtMode::PerOp);
        assert_eq!(doc.declared_reals(), 32);
        let text = doc.to_smtlib();
        assert!(text.contains("(declare-fun psi_3_3.i () Real)"));
        // x(1) maps amplitude 2 to amplitude 0.
        assert!(text.contains("(assert (= (+ 0.0 (- (* 1.0 psi_0_2.r) (* 0.0 psi_0_2.i))) psi_1_0.r))"));
        assert!(text.contains("(= psi_3_2.r 0.0)"));
    }

    #[test]
    fn caret_normalization() {
        let opts = EmitOptions { power: PowerStyle::Caret, logic: false, ..EmitOptions::default() };
        let doc = emit_smt_with(&measure_pc(&[]), 2, opts);
        let text = doc.to_smtlib();
        assert!(!text.contains("set-logic"));
        for x in 0..4 {
            assert!(text.contains(&format!("(^ psi_0_{x}.r 2.0)")));
            assert!(text.contains(&format!("(^ psi_0_{x}.i 2.0)")));
        }
    }

    #[test]
    fn exclusions_stack() {
        let doc = emit_smt(&measure_pc(&[]), 1, SmtMode::Integrated);
        let a: Assignment = [("psi_0_0.r".to_string(), (0.5, 0.6))].into_iter().collect();
        let one = doc.add_exclusion(&a);
        assert_eq!(one.exclusions.len(), 1);
        assert!(one.exclusions[0].contains("(< psi_0_0.r 0.5) (> psi_0_0.r 0.59999999999999998)"));
        let two = one.add_exclusion(&a);
        assert_eq!(two.exclusions.len(), 2);
        assert!(two.is_excluded(&a));
        assert_eq!(doc.add_exclusion(&Assignment::default()), doc);
        let text = two.to_smtlib();
        assert!(text.find("(assert (or").unwrap() < text.find("(check-sat)").unwrap());
    }
}
