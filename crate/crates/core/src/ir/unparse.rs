use std::fmt::Write;

use super::ast::*;

/// Canonical source text. Floats use the shortest representation that
/// round-trips exactly.
pub fn unparse(p: &Program) -> String {
    let mut out = String::new();
    if let Some(dist) = &p.reference_dist {
        let _ = writeln!(out, "@reference({})", dist_text(dist.iter().map(|(k, v)| (k.as_str(), *v))));
    }
    let params: Vec<String> = p
        .params
        .iter()
        .map(|p| match p.kind {
            ParamKind::Int => format!("{}: int", p.name),
            ParamKind::Real => format!("{}: real", p.name),
            ParamKind::Qreg(n) => format!("{}: qreg({n})", p.name),
        })
        .collect();
    let _ = writeln!(out, "program {}({}) {{", p.name, params.join(", "));
    block(&mut out, &p.body, p.qreg_name(), 1);
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(out: &mut String, stmts: &Block, reg: &str, level: usize) {
    for s in stmts {
        indent(out, level);
        stmt(out, s, reg, level);
    }
}

fn stmt(out: &mut String, s: &Stmt, reg: &str, level: usize) {
    match s {
        Stmt::Gate(g, _) => {
            let _ = write!(out, "{}({reg}", g.gate);
            for q in &g.qubits {
                let _ = write!(out, ", {q}");
            }
            for a in &g.angles {
                let _ = write!(out, ", {a:?}");
            }
            out.push_str(");\n");
        }
        Stmt::Return(e, _) => {
            let _ = writeln!(out, "return {};", expr_text(e));
        }
        Stmt::If { cond, then_block, else_block, .. } => {
            let _ = writeln!(out, "if {} {{", cond_text(cond, reg));
            block(out, then_block, reg, level + 1);
            indent(out, level);
            out.push('}');
            match else_block.as_slice() {
                [] => out.push('\n'),
                [chained @ Stmt::If { .. }] => {
                    out.push_str(" else ");
                    stmt(out, chained, reg, level);
                }
                _ => {
                    out.push_str(" else {\n");
                    block(out, else_block, reg, level + 1);
                    indent(out, level);
                    out.push_str("}\n");
                }
            }
        }
    }
}

pub(crate) fn dist_text<'a>(pairs: impl Iterator<Item = (&'a str, f64)>) -> String {
    let items: Vec<String> = pairs.map(|(k, v)| format!("\"{k}\": {v:?}")).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn cond_text(c: &Cond, reg: &str) -> String {
    match c {
        Cond::Classical { lhs, cmp, rhs } => {
            format!("{} {} {}", expr_text(lhs), cmp.symbol(), expr_text(rhs))
        }
        Cond::Measure { qubits, outcomes } => {
            let qs: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
            let os: Vec<String> = outcomes.iter().map(|o| format!("\"{o}\"")).collect();
            format!("measure({reg}, [{}]) == [{}]", qs.join(", "), os.join(", "))
        }
        Cond::StateEq { dist, delta } => {
            format!("check_state_eq({reg}, {}, {delta:?})", dist_text(dist.iter().map(|(k, v)| (k.as_str(), *v))))
        }
        Cond::StateGt { pairs, delta } => {
            format!("check_state_gt({reg}, {}, {delta:?})", dist_text(pairs.iter().map(|(k, v)| (k.as_str(), *v))))
        }
        Cond::StateLt { pairs, delta } => {
            format!("check_state_lt({reg}, {}, {delta:?})", dist_text(pairs.iter().map(|(k, v)| (k.as_str(), *v))))
        }
    }
}

pub fn expr_text(e: &Expr) -> String {
    match e {
        Expr::Int(i) => i.to_string(),
        Expr::Real(x) => format!("{x:?}"),
        Expr::Var(v) => v.clone(),
        Expr::Neg(inner) => format!("-{}", operand_text(inner)),
        Expr::Bin(op, l, r) => format!("{} {} {}", operand_text(l), op.symbol(), operand_text(r)),
    }
}

fn operand_text(e: &Expr) -> String {
    match e {
        Expr::Bin(..) | Expr::Neg(_) => format!("({})", expr_text(e)),
        Expr::Int(i) if *i < 0 => format!("({i})"),
        Expr::Real(x) if x.is_sign_negative() => format!("({x:?})"),
        _ => expr_text(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    /// Structural equality ignoring spans.
    fn strip(p: &Program) -> Program {
        fn blk(b: &Block) -> Block {
            b.iter()
                .map(|s| match s {
                    Stmt::Gate(g, _) => Stmt::Gate(g.clone(), Span::default()),
                    Stmt::Return(e, _) => Stmt::Return(e.clone(), Span::default()),
                    Stmt::If { site, cond, then_block, else_block, .. } => Stmt::If {
                        site: *site,
                        cond: cond.clone(),
                        then_block: blk(then_block),
                        else_block: blk(else_block),
                        span: Span::default(),
                    },
                })
                .collect()
        }
        let mut q = p.clone();
        q.body = blk(&p.body);
        for s in &mut q.branch_sites {
            s.span = Span::default();
        }
        q
    }

    #[test]
    fn round_trips_bundled_programs() {
        for src in [
            include_str!("../../../../programs/teleport.qcp"),
            include_str!("../../../../programs/mi_bug.qcp"),
            include_str!("../../../../programs/bell_check.qcp"),
        ] {
            let p = parse_program(src).unwrap();
            let again = parse_program(&unparse(&p)).unwrap();
            assert_eq!(strip(&p), strip(&again));
            assert_eq!(unparse(&again), unparse(&p));
        }
    }

    #[test]
    fn keeps_full_precision_constants() {
        let src = "program f(a: real, q: qreg(1)) {
            if check_state_gt(q, {\"1\": 0.12345678901234567}, 0.0012345678901234567) { rz(q, 0, 0.7853981633974483); }
            if a * (a - 2) > -1.5e-7 { return 0; }
        }";
        let p = parse_program(src).unwrap();
        let text = unparse(&p);
        assert!(text.contains("0.12345678901234566") || text.contains("0.12345678901234567"));
        assert_eq!(strip(&parse_program(&text).unwrap()), strip(&p));
    }
}
