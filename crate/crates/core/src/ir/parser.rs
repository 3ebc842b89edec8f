//! Recursive-descent parser for `.qcp` sources.
//!
//! ```text
//! file    := ('@' 'reference' '(' dist ')')* 'program' IDENT '(' param (',' param)* ')' block
//! param   := IDENT ':' ('int' | 'real' | 'qreg' '(' INT ')')
//! block   := '{' stmt* '}'
//! stmt    := GATE '(' IDENT (',' angle)+ ')' ';'
//!          | 'if' cond block ('else' (if | block))?
//!          | 'return' expr ';'
//! cond    := 'measure' '(' IDENT ',' '[' INT,* ']' ')' '==' '[' STRING,* ']'
//!          | 'check_state_eq' '(' IDENT ',' dist ',' number ')'
//!          | ('check_state_gt' | 'check_state_lt') '(' IDENT ',' dist ',' number ')'
//!          | expr CMP expr
//! dist    := '{' (STRING ':' number),* '}'
//! ```
//!
//! Gate operands are constant expressions (`pi` allowed); the first `arity`
//! of them are qubit indices, the rest angles.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::validate::validate_program;
use crate::error::ParseError;

/// Parses and validates a program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let (program, mut problems) = parse_unvalidated(src)?;
    problems.extend(validate_program(&program).violations.into_iter().map(|v| v.to_string()));
    if problems.is_empty() {
        Ok(program)
    } else {
        Err(ParseError::Validation(problems))
    }
}

/// Parses without running validation. Register-name mismatches and
/// non-constant angles, which the AST cannot represent, are returned as
/// violation messages.
pub fn parse_unvalidated(src: &str) -> Result<(Program, Vec<String>), ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, qreg: None, problems: Vec::new() };
    let program = p.program()?;
    Ok((program, p.problems))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qreg: Option<String>,
    problems: Vec<String>,
}

/// Constant-folded angle operand.
enum Operand {
    Value(f64),
    Integer(i64),
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { span: self.span(), expected: expected.to_string(), found: self.peek().describe() })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("`{p}`"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.err("string literal"),
        }
    }

    fn uint(&mut self) -> Result<usize, ParseError> {
        match *self.peek() {
            Tok::Int(i) if i >= 0 => {
                self.bump();
                Ok(i as usize)
            }
            _ => self.err("non-negative integer"),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let neg = if self.is_punct("-") {
            self.bump();
            true
        } else {
            false
        };
        let v = match *self.peek() {
            Tok::Int(i) => i as f64,
            Tok::Float(x) => x,
            _ => return self.err("number"),
        };
        self.bump();
        Ok(if neg { -v } else { v })
    }

    fn comma_list<T>(
        &mut self,
        close: &str,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        let mut out = Vec::new();
        if self.is_punct(close) {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.is_punct(",") {
                self.bump();
            } else {
                self.expect_punct(close)?;
                return Ok(out);
            }
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut reference = None;
        while self.is_punct("@") {
            self.bump();
            let span = self.span();
            let attr = self.ident()?;
            if attr != "reference" {
                return Err(ParseError::Syntax {
                    span,
                    expected: "`reference`".into(),
                    found: format!("attribute `{attr}`"),
                });
            }
            self.expect_punct("(")?;
            reference = Some(self.dist_map()?);
            self.expect_punct(")")?;
        }
        self.expect_keyword("program")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let params = self.comma_list(")", Self::param)?;
        self.qreg = params.iter().find(|p| !p.is_classical()).map(|p| p.name.clone());
        let body = self.block()?;
        if *self.peek() != Tok::Eof {
            return self.err("end of input");
        }
        let mut program = Program { name, params, body, branch_sites: Vec::new(), reference_dist: reference };
        program.assign_sites();
        Ok(program)
    }

    fn param(&mut self) -> Result<Param, ParseError> {
        let name = self.ident()?;
        self.expect_punct(":")?;
        let kind = match self.peek() {
            Tok::Ident(k) if k == "int" => {
                self.bump();
                ParamKind::Int
            }
            Tok::Ident(k) if k == "real" => {
                self.bump();
                ParamKind::Real
            }
            Tok::Ident(k) if k == "qreg" => {
                self.bump();
                self.expect_punct("(")?;
                let n = self.uint()?;
                self.expect_punct(")")?;
                ParamKind::Qreg(n)
            }
            _ => return self.err("`int`, `real` or `qreg(N)`"),
        };
        Ok(Param { name, kind })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if *self.peek() == Tok::Eof {
                return self.err("`}`");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        if self.is_keyword("if") {
            return self.if_stmt();
        }
        if self.is_keyword("return") {
            self.bump();
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt::Return(e, span));
        }
        let name = self.ident()?;
        let Some(gate) = Gate::from_name(&name) else {
            return Err(ParseError::Syntax {
                span,
                expected: "gate name, `if` or `return`".into(),
                found: format!("identifier `{name}`"),
            });
        };
        self.expect_punct("(")?;
        self.register_operand()?;
        let mut operands = Vec::new();
        while self.is_punct(",") {
            self.bump();
            operands.push(self.operand()?);
        }
        self.expect_punct(")")?;
        self.expect_punct(";")?;

        let arity = gate.arity();
        if operands.len() != arity + gate.angle_count() {
            self.problems.push(format!(
                "{span}: gate `{gate}` takes {arity} qubit(s) and {} angle(s), got {} operand(s)",
                gate.angle_count(),
                operands.len()
            ));
        }
        let mut qubits = Vec::new();
        let mut angles = Vec::new();
        for (i, op) in operands.into_iter().enumerate() {
            match (i < arity, op) {
                (true, Operand::Integer(q)) if q >= 0 => qubits.push(q as usize),
                (true, _) => self.problems.push(format!("{span}: qubit operand of `{gate}` must be an index")),
                (false, Operand::Integer(v)) => angles.push(v as f64),
                (false, Operand::Value(v)) => angles.push(v),
            }
        }
        Ok(Stmt::Gate(GateOp { gate, qubits, angles }, span))
    }

    fn register_operand(&mut self) -> Result<(), ParseError> {
        let span = self.span();
        let reg = self.ident()?;
        if self.qreg.as_deref() != Some(reg.as_str()) {
            self.problems.push(format!("{span}: `{reg}` is not the quantum register parameter"));
        }
        Ok(())
    }

    /// Constant operand; identifiers other than `pi` are reported as
    /// non-constant and folded to zero.
    fn operand(&mut self) -> Result<Operand, ParseError> {
        let span = self.span();
        let mut names = Vec::new();
        let (value, integral) = self.const_sum(&mut names)?;
        for n in names {
            self.problems.push(format!("{span}: angle operand `{n}` is not a constant"));
        }
        Ok(match integral {
            Some(i) => Operand::Integer(i),
            None => Operand::Value(value),
        })
    }

    // Constant folding returns the value and, when no float or `pi` took
    // part, the exact integer.
    fn const_sum(&mut self, names: &mut Vec<String>) -> Result<(f64, Option<i64>), ParseError> {
        let (mut v, mut int) = self.const_product(names)?;
        loop {
            let sign = if self.is_punct("+") {
                1.0
            } else if self.is_punct("-") {
                -1.0
            } else {
                return Ok((v, int));
            };
            self.bump();
            let (r, rint) = self.const_product(names)?;
            v += sign * r;
            int = match (int, rint) {
                (Some(a), Some(b)) => Some(if sign > 0.0 { a + b } else { a - b }),
                _ => None,
            };
        }
    }

    fn const_product(&mut self, names: &mut Vec<String>) -> Result<(f64, Option<i64>), ParseError> {
        let (mut v, mut int) = self.const_unary(names)?;
        loop {
            if self.is_punct("*") {
                self.bump();
                let (r, rint) = self.const_unary(names)?;
                v *= r;
                int = int.zip(rint).map(|(a, b)| a * b);
            } else if self.is_punct("/") {
                self.bump();
                let (r, _) = self.const_unary(names)?;
                v /= r;
                int = None;
            } else {
                return Ok((v, int));
            }
        }
    }

    fn const_unary(&mut self, names: &mut Vec<String>) -> Result<(f64, Option<i64>), ParseError> {
        if self.is_punct("-") {
            self.bump();
            let (v, i) = self.const_unary(names)?;
            return Ok((-v, i.map(|i| -i)));
        }
        if self.is_punct("(") {
            self.bump();
            let r = self.const_sum(names)?;
            self.expect_punct(")")?;
            return Ok(r);
        }
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok((i as f64, Some(i)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok((x, None))
            }
            Tok::Ident(s) if s == "pi" => {
                self.bump();
                Ok((PI, None))
            }
            Tok::Ident(s) => {
                self.bump();
                names.push(s);
                Ok((0.0, None))
            }
            _ => self.err("constant"),
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.span();
        self.expect_keyword("if")?;
        let cond = self.cond()?;
        let then_block = self.block()?;
        let else_block = if self.is_keyword("else") {
            self.bump();
            if self.is_keyword("if") {
                vec![self.if_stmt()?]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(Stmt::If { site: 0, cond, then_block, else_block, span })
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        if self.is_keyword("measure") {
            self.bump();
            self.expect_punct("(")?;
            self.register_operand()?;
            self.expect_punct(",")?;
            self.expect_punct("[")?;
            let qubits = self.comma_list("]", Self::uint)?;
            self.expect_punct(")")?;
            self.expect_punct("==")?;
            self.expect_punct("[")?;
            let outcomes = self.comma_list("]", Self::string)?;
            return Ok(Cond::Measure { qubits, outcomes });
        }
        for kw in ["check_state_eq", "check_state_gt", "check_state_lt"] {
            if self.is_keyword(kw) {
                self.bump();
                self.expect_punct("(")?;
                self.register_operand()?;
                self.expect_punct(",")?;
                let span = self.span();
                let pairs = self.dist_pairs()?;
                self.expect_punct(",")?;
                let delta = self.number()?;
                self.expect_punct(")")?;
                let mut seen = HashSet::new();
                for (k, _) in &pairs {
                    if !seen.insert(k.clone()) {
                        self.problems.push(format!("{span}: outcome \"{k}\" listed twice"));
                    }
                }
                return Ok(match kw {
                    "check_state_eq" => Cond::StateEq { dist: pairs.into_iter().collect(), delta },
                    "check_state_gt" => Cond::StateGt { pairs, delta },
                    _ => Cond::StateLt { pairs, delta },
                });
            }
        }
        let lhs = self.expr()?;
        let cmp = match self.peek() {
            Tok::Punct("==") => Cmp::Eq,
            Tok::Punct("!=") => Cmp::Ne,
            Tok::Punct("<") => Cmp::Lt,
            Tok::Punct("<=") => Cmp::Le,
            Tok::Punct(">") => Cmp::Gt,
            Tok::Punct(">=") => Cmp::Ge,
            _ => return self.err("comparison operator"),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond::Classical { lhs, cmp, rhs })
    }

    fn dist_pairs(&mut self) -> Result<Vec<(String, f64)>, ParseError> {
        self.expect_punct("{")?;
        self.comma_list("}", |p| {
            let k = p.string()?;
            p.expect_punct(":")?;
            let v = p.number()?;
            Ok((k, v))
        })
    }

    fn dist_map(&mut self) -> Result<BTreeMap<String, f64>, ParseError> {
        Ok(self.dist_pairs()?.into_iter().collect())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_punct("+") {
                BinOp::Add
            } else if self.is_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while self.is_punct("*") {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_punct("-") {
            self.bump();
            return Ok(match self.unary()? {
                Expr::Int(i) => Expr::Int(-i),
                Expr::Real(x) => Expr::Real(-x),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.is_punct("(") {
            self.bump();
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Expr::Real(x))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::Var(s))
            }
            _ => self.err("expression"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TELEPORT: &str = include_str!("../../../../programs/teleport.qcp");

    #[test]
    fn parses_teleport() {
        let p = parse_program(TELEPORT).unwrap();
        assert_eq!(p.name, "bob_process");
        assert_eq!(p.n(), 2);
        assert_eq!(p.branch_sites.len(), 3);
        assert_eq!(p.qreg_name(), "qc");
        assert!(matches!(
            p.cond(0),
            Some(Cond::Measure { qubits, outcomes }) if qubits == &[0] && outcomes == &["1"]
        ));
        assert!(matches!(p.cond(1), Some(Cond::Classical { cmp: Cmp::Eq, .. })));
    }

    #[test]
    fn empty_body_with_return_has_no_sites() {
        let p = parse_program("program f(q: qreg(1)) { return 0; }").unwrap();
        assert!(p.branch_sites.is_empty());
    }

    #[test]
    fn out_of_range_gate_is_a_validation_error() {
        let err = parse_program("program f(q: qreg(2)) { x(q, 5); }").unwrap_err();
        assert!(matches!(err, ParseError::Validation(v) if v[0].contains("out of range")));
    }

    #[test]
    fn non_constant_angle_is_a_validation_error() {
        let err = parse_program("program f(a: real, q: qreg(1)) { rz(q, 0, a); }").unwrap_err();
        assert!(matches!(err, ParseError::Validation(v) if v[0].contains("not a constant")));
    }

    #[test]
    fn covering_measure_is_rejected() {
        let err =
            parse_program("program f(q: qreg(1)) { if measure(q, [0]) == [\"0\", \"1\"] { return 1; } }").unwrap_err();
        assert!(matches!(err, ParseError::Validation(v) if v[0].contains("negation infeasible")));
    }

    #[test]
    fn syntax_error_reports_location_and_expectation() {
        let err = parse_program("program f(q: qreg(1)) {\n  h(q, 0)\n}").unwrap_err();
        match err {
            ParseError::Syntax { span, expected, .. } => {
                assert_eq!(span.line, 3);
                assert_eq!(expected, "`;`");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn angle_expressions_fold() {
        let p = parse_program("program f(q: qreg(1)) { rz(q, 0, pi/4); p(q, 0, -2*pi); rx(q, 0, 1); }").unwrap();
        let angles: Vec<f64> = p
            .body
            .iter()
            .map(|s| match s {
                Stmt::Gate(g, _) => g.angles[0],
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(angles, vec![PI / 4.0, -2.0 * PI, 1.0]);
    }

    #[test]
    fn else_if_chains_become_nested_sites() {
        let p = parse_program(
            "program f(a: int, q: qreg(1)) {
                if a == 0 { return 0; } else if a == 1 { return 1; } else if a == 2 { return 2; } else { return 3; }
            }",
        )
        .unwrap();
        assert_eq!(p.branch_sites.len(), 3);
        assert_eq!(p.branch_sites[1].parent, Some((0, false)));
        assert_eq!(p.branch_sites[2].parent, Some((1, false)));
    }

    #[test]
    fn nested_ifs_are_numbered_in_pre_order() {
        let p = parse_program(
            "program f(a: int, q: qreg(1)) {
                if a == 0 { if a == 1 { h(q, 0); } }
                if a > 3 { x(q, 0); }
            }",
        )
        .unwrap();
        let ids: Vec<_> = p.branch_sites.iter().map(|s| (s.id, s.parent)).collect();
        assert_eq!(ids, vec![(0, None), (1, Some((0, true))), (2, None)]);
        assert_eq!(p.branch_sites[1].span.line, 2);
    }

    #[test]
    fn reference_attribute_is_recorded() {
        let p = parse_program(
            "@reference({\"0\": 0.25, \"1\": 0.75})\nprogram f(q: qreg(1)) { ry(q, 0, 2.0943951023931957); }",
        )
        .unwrap();
        assert_eq!(p.reference_dist.unwrap()["1"], 0.75);
    }
}
