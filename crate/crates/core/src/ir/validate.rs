use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;

pub const DEFAULT_MAX_DEPTH: usize = 8;
const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub span: Option<Span>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.span {
            Some(s) => write!(f, "{s}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_program(p: &Program) -> ValidationReport {
    validate_with_depth(p, DEFAULT_MAX_DEPTH)
}

pub fn validate_with_depth(p: &Program, max_depth: usize) -> ValidationReport {
    let mut v = Validator { program: p, max_depth, out: Vec::new() };
    v.header();
    v.block(&p.body, 0);
    v.sites();
    if let Some(dist) = &p.reference_dist {
        v.distribution(dist, None, "reference distribution");
    }
    ValidationReport { violations: v.out }
}

struct Validator<'a> {
    program: &'a Program,
    max_depth: usize,
    out: Vec<Violation>,
}

impl Validator<'_> {
    fn push(&mut self, span: Option<Span>, message: impl Into<String>) {
        self.out.push(Violation { span, message: message.into() });
    }

    fn header(&mut self) {
        let p = self.program;
        let qregs: Vec<_> = p.params.iter().filter(|p| !p.is_classical()).collect();
        if qregs.len() != 1 {
            self.push(None, format!("expected exactly one quantum register, found {}", qregs.len()));
        }
        if let Some(ParamKind::Qreg(0)) = qregs.first().map(|q| q.kind) {
            self.push(None, "quantum register must have at least one qubit");
        }
        let mut names = HashSet::new();
        for param in &p.params {
            if !names.insert(param.name.as_str()) {
                self.push(None, format!("duplicate parameter `{}`", param.name));
            }
        }
    }

    fn sites(&mut self) {
        let mut ids = HashSet::new();
        for s in &self.program.branch_sites {
            if !ids.insert(s.id) {
                self.push(Some(s.span), format!("duplicate branch site id {}", s.id));
            }
        }
    }

    fn block(&mut self, block: &Block, depth: usize) {
        for stmt in block {
            match stmt {
                Stmt::Gate(g, span) => self.gate(g, *span),
                Stmt::Return(e, span) => {
                    self.expr(e, *span);
                    if self.is_real(e) {
                        self.push(Some(*span), "return value must be an integer expression");
                    }
                }
                Stmt::If { cond, then_block, else_block, span, .. } => {
                    if depth + 1 > self.max_depth {
                        self.push(Some(*span), format!("conditional nesting exceeds depth {}", self.max_depth));
                    }
                    self.cond(cond, *span);
                    self.block(then_block, depth + 1);
                    // `else if` links are a chain, not deeper nesting.
                    let chained = matches!(else_block.as_slice(), [Stmt::If { .. }]);
                    self.block(else_block, if chained { depth } else { depth + 1 });
                }
            }
        }
    }

    fn gate(&mut self, g: &GateOp, span: Span) {
        let n = self.program.n();
        if g.qubits.len() != g.gate.arity() {
            self.push(
                Some(span),
                format!("gate `{}` expects {} qubit(s), got {}", g.gate, g.gate.arity(), g.qubits.len()),
            );
        }
        if g.angles.len() != g.gate.angle_count() {
            self.push(
                Some(span),
                format!("gate `{}` expects {} angle(s), got {}", g.gate, g.gate.angle_count(), g.angles.len()),
            );
        }
        for &q in &g.qubits {
            if q >= n {
                self.push(Some(span), format!("qubit index {q} out of range for {n} qubit(s)"));
            }
        }
        let distinct: HashSet<_> = g.qubits.iter().collect();
        if distinct.len() != g.qubits.len() {
            self.push(Some(span), format!("gate `{}` repeats a qubit operand", g.gate));
        }
        if g.angles.iter().any(|a| !a.is_finite()) {
            self.push(Some(span), "angle is not finite");
        }
    }

    fn cond(&mut self, cond: &Cond, span: Span) {
        let n = self.program.n();
        match cond {
            Cond::Classical { lhs, rhs, .. } => {
                self.expr(lhs, span);
                self.expr(rhs, span);
            }
            Cond::Measure { qubits, outcomes } => {
                if qubits.is_empty() {
                    self.push(Some(span), "measure needs at least one qubit");
                }
                for &q in qubits {
                    if q >= n {
                        self.push(Some(span), format!("qubit index {q} out of range for {n} qubit(s)"));
                    }
                }
                if qubits.windows(2).any(|w| w[0] >= w[1]) {
                    self.push(Some(span), "measured qubits must be distinct and listed in ascending order");
                }
                if outcomes.is_empty() {
                    self.push(Some(span), "measure needs at least one expected outcome");
                }
                let mut seen = HashSet::new();
                for o in outcomes {
                    if o.len() != qubits.len() || outcome_index(o).is_none() {
                        self.push(Some(span), format!("outcome \"{o}\" is not a {}-bit string", qubits.len()));
                    }
                    if !seen.insert(o) {
                        self.push(Some(span), format!("outcome \"{o}\" listed twice"));
                    }
                }
                if qubits.len() < usize::BITS as usize && seen.len() >= 1usize << qubits.len() {
                    self.push(Some(span), "negation infeasible: expected outcomes cover every measurement result");
                }
            }
            Cond::StateEq { dist, delta } => {
                self.distribution(dist, Some(span), "check_state_eq distribution");
                if !delta.is_finite() || *delta <= 0.0 {
                    self.push(Some(span), format!("delta must be positive, got {delta}"));
                }
            }
            Cond::StateGt { pairs, delta } | Cond::StateLt { pairs, delta } => {
                if pairs.is_empty() {
                    self.push(Some(span), "probability bound list is empty");
                }
                let mut seen = HashSet::new();
                for (o, p) in pairs {
                    self.outcome(o, span);
                    if !(0.0..=1.0).contains(p) {
                        self.push(Some(span), format!("probability {p} for \"{o}\" outside [0, 1]"));
                    }
                    if !seen.insert(o) {
                        self.push(Some(span), format!("outcome \"{o}\" listed twice"));
                    }
                }
                if !delta.is_finite() || *delta < 0.0 {
                    self.push(Some(span), format!("delta must be non-negative, got {delta}"));
                }
            }
        }
    }

    fn outcome(&mut self, o: &str, span: Span) {
        let n = self.program.n();
        if o.len() != n || outcome_index(o).is_none() {
            self.push(Some(span), format!("outcome \"{o}\" is not a {n}-bit string"));
        }
    }

    /// Missing outcomes read as probability 0.
    fn distribution(&mut self, dist: &OutcomeMap, span: Option<Span>, what: &str) {
        let n = self.program.n();
        let mut total = 0.0;
        for (o, p) in dist {
            if o.len() != n || outcome_index(o).is_none() {
                self.push(span, format!("{what}: outcome \"{o}\" is not a {n}-bit string"));
            }
            if !(0.0..=1.0).contains(p) {
                self.push(span, format!("{what}: probability {p} for \"{o}\" outside [0, 1]"));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORM_TOL {
            self.push(span, format!("{what}: probabilities sum to {total}, not 1"));
        }
    }

    fn expr(&mut self, e: &Expr, span: Span) {
        for v in e.vars() {
            match self.program.param(v) {
                Some(p) if p.is_classical() => {}
                Some(_) => self.push(Some(span), format!("`{v}` is quantum and cannot appear in an expression")),
                None => self.push(Some(span), format!("unknown name `{v}`")),
            }
        }
    }

    fn is_real(&self, e: &Expr) -> bool {
        match e {
            Expr::Int(_) => false,
            Expr::Real(_) => true,
            Expr::Var(v) => matches!(self.program.param(v).map(|p| p.kind), Some(ParamKind::Real)),
            Expr::Neg(e) => self.is_real(e),
            Expr::Bin(_, l, r) => self.is_real(l) || self.is_real(r),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_unvalidated;

    fn report(src: &str) -> ValidationReport {
        let (p, extra) = parse_unvalidated(src).unwrap();
        assert!(extra.is_empty(), "{extra:?}");
        validate_program(&p)
    }

    #[test]
    fn teleport_is_valid() {
        assert!(report(include_str!("../../../../programs/teleport.qcp")).is_empty());
    }

    #[test]
    fn unnormalized_distribution_is_one_violation() {
        let r =
            report("program f(q: qreg(2)) { if check_state_eq(q, {\"00\": 0.5, \"11\": 0.4}, 0.01) { return 1; } }");
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].message.contains("sum to"));
    }

    #[test]
    fn measure_covering_all_outcomes_has_infeasible_negation() {
        // The complement of {"0", "1"} among 1-bit strings is empty.
        let r = report("program f(q: qreg(1)) { if measure(q, [0]) == [\"0\", \"1\"] { return 1; } }");
        assert_eq!(r.violations.len(), 1);
        assert!(r.violations[0].message.contains("negation infeasible"));
    }

    #[test]
    fn catches_bad_bounds_and_names() {
        let r = report(
            "program f(a: int, q: qreg(1)) {
                if check_state_gt(q, {\"0\": 1.5, \"01\": 0.2}, 0.01) { return b; }
                if a > 0.5 { return 1.5; }
            }",
        );
        let msgs: Vec<_> = r.violations.iter().map(|v| v.message.as_str()).collect();
        assert!(msgs.iter().any(|m| m.contains("outside [0, 1]")));
        assert!(msgs.iter().any(|m| m.contains("not a 1-bit string")));
        assert!(msgs.iter().any(|m| m.contains("unknown name `b`")));
        assert!(msgs.iter().any(|m| m.contains("integer expression")));
    }

    #[test]
    fn depth_limit_applies_to_nesting_not_chains() {
        let mut nested = String::from("program f(a: int, q: qreg(1)) {");
        for _ in 0..9 {
            nested.push_str("if a == 0 {");
        }
        nested.push_str(&"}".repeat(9));
        nested.push('}');
        assert!(report(&nested).violations.iter().any(|v| v.message.contains("depth")));

        let mut chain = String::from("program f(a: int, q: qreg(1)) { if a == 0 { }");
        for i in 1..12 {
            chain.push_str(&format!(" else if a == {i} {{ }}"));
        }
        chain.push('}');
        assert!(report(&chain).is_empty());
    }

    #[test]
    fn measured_qubits_must_ascend() {
        let r = report("program f(q: qreg(2)) { if measure(q, [1, 0]) == [\"01\"] { return 1; } }");
        assert!(r.violations[0].message.contains("ascending"));
    }
}
