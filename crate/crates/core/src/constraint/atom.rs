use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConstraintError;
use crate::ir::{outcome_index, Cmp, Cond, Expr, GateOp, OutcomeMap, ParamKind, Program};
use crate::sim::{eval_expr, StateVector};
use crate::symbolic::{AmplitudeExprs, SymbolicEnv};
use crate::testcase::{TestCase, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AtomKind {
    MeasureIn,
    MeasureNotIn,
    DistEq,
    DistNeq,
    ProbGt,
    ProbLe,
    ClassicalCmp,
}

impl AtomKind {
    pub fn negate(self) -> AtomKind {
        match self {
            AtomKind::MeasureIn => AtomKind::MeasureNotIn,
            AtomKind::MeasureNotIn => AtomKind::MeasureIn,
            AtomKind::DistEq => AtomKind::DistNeq,
            AtomKind::DistNeq => AtomKind::DistEq,
            AtomKind::ProbGt => AtomKind::ProbLe,
            AtomKind::ProbLe => AtomKind::ProbGt,
            AtomKind::ClassicalCmp => AtomKind::ClassicalCmp,
        }
    }
}

/// Classical symbol appearing in an atom, with its sort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolRef {
    pub param: String,
    pub symbol: String,
    pub real: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AtomParams {
    Measure {
        qubits: Vec<usize>,
        outcomes: Vec<String>,
        /// Basis indices whose measured bits are in `outcomes` (`S_r`).
        inside: Vec<usize>,
    },
    Dist {
        dist: OutcomeMap,
        /// `D_a` per basis index.
        target: Vec<f64>,
        delta: f64,
    },
    Bound {
        /// `(outcome, basis index, bound)`; the bound is `p − δ` for
        /// `check_state_gt` and `p + δ` for `check_state_lt`.
        pairs: Vec<(String, usize, f64)>,
        /// Conjunction over pairs when true, disjunction when false.
        conjunctive: bool,
    },
    Classical {
        /// Expressions over rendered symbol names (`alice_0`).
        lhs: Expr,
        cmp: Cmp,
        rhs: Expr,
        symbols: Vec<SymbolRef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub kind: AtomKind,
    pub site: usize,
    /// Branch polarity this atom asserts.
    pub polarity: bool,
    /// Gates executed before the conditional.
    pub ops: Vec<GateOp>,
    pub exprs: AmplitudeExprs,
    pub params: AtomParams,
    /// Quantum object name used in rendering (`sqc`).
    pub object: String,
}

impl Atom {
    pub fn prefix_len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_quantum(&self) -> bool {
        self.kind != AtomKind::ClassicalCmp
    }

    /// Basis indices whose amplitudes a measurement atom forces to zero.
    pub fn zeroed_amplitudes(&self) -> Vec<usize> {
        match (&self.params, self.kind) {
            (AtomParams::Measure { inside, .. }, AtomKind::MeasureIn) => {
                (0..self.exprs.dim()).filter(|x| !inside.contains(x)).collect()
            }
            (AtomParams::Measure { inside, .. }, AtomKind::MeasureNotIn) => inside.clone(),
            _ => Vec::new(),
        }
    }

    /// How far `tc` is from satisfying the atom: 0 when satisfied, the size
    /// of the largest (for conjunctions) or smallest (for disjunctions)
    /// bound violation otherwise. Classical violations are infinite.
    pub fn violation(&self, tc: &TestCase) -> f64 {
        match &self.params {
            AtomParams::Classical { lhs, cmp, rhs, symbols } => {
                let env: BTreeMap<String, Value> =
                    symbols.iter().filter_map(|s| tc.classical.get(&s.param).map(|v| (s.symbol.clone(), *v))).collect();
                match (eval_expr(lhs, &env), eval_expr(rhs, &env)) {
                    (Ok(l), Ok(r)) if compare(l, *cmp, r) => 0.0,
                    _ => f64::INFINITY,
                }
            }
            _ => self.quantum_violation(&tc.initial_state),
        }
    }

    fn quantum_violation(&self, initial: &StateVector) -> f64 {
        let amps = self.exprs.evaluate(initial);
        let prob = |x: usize| amps[x].norm_sqr();
        let worst = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
        let best = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);
        match (&self.params, self.kind) {
            (AtomParams::Measure { .. }, _) => {
                worst(&mut self.zeroed_amplitudes().into_iter().map(|x| amps[x].re.abs().max(amps[x].im.abs())))
            }
            (AtomParams::Dist { target, delta, .. }, AtomKind::DistEq) => {
                worst(&mut (0..target.len()).map(|x| ((prob(x) - target[x]).abs() - delta).max(0.0)))
            }
            (AtomParams::Dist { target, delta, .. }, _) => {
                best(&mut (0..target.len()).map(|x| (delta - (prob(x) - target[x]).abs()).max(0.0)))
            }
            (AtomParams::Bound { pairs, conjunctive }, kind) => {
                let gt = kind == AtomKind::ProbGt;
                let mut each = pairs.iter().map(|&(_, x, b)| {
                    let p = prob(x);
                    if gt {
                        (b - p).max(0.0)
                    } else {
                        (p - b).max(0.0)
                    }
                });
                if *conjunctive {
                    worst(&mut each)
                } else {
                    best(&mut each)
                }
            }
            (AtomParams::Classical { .. }, _) => unreachable!(),
        }
    }
}

fn compare(l: Value, cmp: Cmp, r: Value) -> bool {
    match (l, r) {
        (Value::Int(a), Value::Int(b)) => cmp.holds(a, b),
        _ => cmp.holds(l.as_f64(), r.as_f64()),
    }
}

/// Mutual negation of an atom's kind, keeping bounds and expressions.
pub fn negate(a: &Atom) -> Atom {
    let mut out = a.clone();
    out.kind = a.kind.negate();
    out.polarity = !a.polarity;
    match &mut out.params {
        AtomParams::Classical { cmp, .. } => *cmp = cmp.negate(),
        AtomParams::Bound { conjunctive, .. } => *conjunctive = !*conjunctive,
        _ => {}
    }
    out
}

fn base(
    kind: AtomKind,
    site: usize,
    polarity: bool,
    ops: &[GateOp],
    exprs: AmplitudeExprs,
    params: AtomParams,
    object: &str,
) -> Atom {
    Atom { kind, site, polarity, ops: ops.to_vec(), exprs, params, object: object.to_string() }
}

/// Local measured-bits index of a basis index: bit `j` is `qubits[j]`.
fn measured_bits(x: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().map(|(j, &q)| (x >> q & 1) << j).sum()
}

/// The context shared by every atom at one conditional.
pub struct AtomSite<'a> {
    pub site: usize,
    pub ops: &'a [GateOp],
    pub exprs: AmplitudeExprs,
    pub object: &'a str,
}

pub fn measure_constraint(
    at: AtomSite<'_>,
    qubits: &[usize],
    outcomes: &[String],
    polarity: bool,
) -> Result<Atom, ConstraintError> {
    let wanted: Vec<usize> = outcomes.iter().filter_map(|o| outcome_index(o)).collect();
    let inside: Vec<usize> = (0..at.exprs.dim()).filter(|&x| wanted.contains(&measured_bits(x, qubits))).collect();
    if !polarity && inside.len() == at.exprs.dim() {
        return Err(ConstraintError::InfeasibleNegation(at.site));
    }
    let kind = if polarity { AtomKind::MeasureIn } else { AtomKind::MeasureNotIn };
    let params = AtomParams::Measure { qubits: qubits.to_vec(), outcomes: outcomes.to_vec(), inside };
    Ok(base(kind, at.site, polarity, at.ops, at.exprs, params, at.object))
}

pub fn eq_constraint(at: AtomSite<'_>, dist: &OutcomeMap, delta: f64, polarity: bool) -> Atom {
    let mut target = vec![0.0; at.exprs.dim()];
    for (o, p) in dist {
        if let Some(i) = outcome_index(o).filter(|&i| i < target.len()) {
            target[i] = *p;
        }
    }
    let kind = if polarity { AtomKind::DistEq } else { AtomKind::DistNeq };
    let params = AtomParams::Dist { dist: dist.clone(), target, delta };
    base(kind, at.site, polarity, at.ops, at.exprs, params, at.object)
}

fn bound_pairs(pairs: &[(String, f64)], offset: f64) -> Vec<(String, usize, f64)> {
    pairs.iter().filter_map(|(o, p)| outcome_index(o).map(|x| (o.clone(), x, p + offset))).collect()
}

/// True: `|⟨a_s|φ⟩|² > p_s − δ` for every pair. False: `≤` for some pair.
pub fn gt_constraint(at: AtomSite<'_>, pairs: &[(String, f64)], delta: f64, polarity: bool) -> Atom {
    let kind = if polarity { AtomKind::ProbGt } else { AtomKind::ProbLe };
    let params = AtomParams::Bound { pairs: bound_pairs(pairs, -delta), conjunctive: polarity };
    base(kind, at.site, polarity, at.ops, at.exprs, params, at.object)
}

/// True: `|⟨a_s|φ⟩|² ≤ p_s + δ` for every pair. False: `>` for some pair.
pub fn lt_constraint(at: AtomSite<'_>, pairs: &[(String, f64)], delta: f64, polarity: bool) -> Atom {
    let kind = if polarity { AtomKind::ProbLe } else { AtomKind::ProbGt };
    let params = AtomParams::Bound { pairs: bound_pairs(pairs, delta), conjunctive: polarity };
    base(kind, at.site, polarity, at.ops, at.exprs, params, at.object)
}

pub fn classical_constraint(
    at: AtomSite<'_>,
    program: &Program,
    cond: &Cond,
    env: &SymbolicEnv,
    polarity: bool,
) -> Result<Atom, ConstraintError> {
    let Cond::Classical { lhs, cmp, rhs } = cond else {
        panic!("classical_constraint called on a quantum condition");
    };
    let mut symbols = Vec::new();
    let mut rename = |e: &Expr| -> Result<Expr, ConstraintError> { rename_vars(e, program, env, &mut symbols) };
    let (lhs, rhs) = (rename(lhs)?, rename(rhs)?);
    let cmp = if polarity { *cmp } else { cmp.negate() };
    let params = AtomParams::Classical { lhs, cmp, rhs, symbols };
    Ok(base(AtomKind::ClassicalCmp, at.site, polarity, at.ops, at.exprs, params, at.object))
}

fn rename_vars(
    e: &Expr,
    program: &Program,
    env: &SymbolicEnv,
    symbols: &mut Vec<SymbolRef>,
) -> Result<Expr, ConstraintError> {
    Ok(match e {
        Expr::Var(v) => {
            let sym = env.symbol(v).ok_or_else(|| ConstraintError::UnboundSymbol(v.clone()))?;
            let name = sym.to_string();
            if !symbols.iter().any(|s| s.symbol == name) {
                let real = matches!(program.param(v).map(|p| p.kind), Some(ParamKind::Real));
                symbols.push(SymbolRef { param: v.clone(), symbol: name.clone(), real });
            }
            Expr::Var(name)
        }
        Expr::Neg(inner) => Expr::Neg(Box::new(rename_vars(inner, program, env, symbols)?)),
        Expr::Bin(op, l, r) => Expr::Bin(
            *op,
            Box::new(rename_vars(l, program, env, symbols)?),
            Box::new(rename_vars(r, program, env, symbols)?),
        ),
        lit => lit.clone(),
    })
}

/// Builds the atom for `cond` reached after `ops`.
pub fn atom_for(
    program: &Program,
    env: &SymbolicEnv,
    site: usize,
    ops: &[GateOp],
    exprs: AmplitudeExprs,
    polarity: bool,
) -> Result<Atom, ConstraintError> {
    let cond = program.cond(site).expect("branch site exists in program");
    let at = AtomSite { site, ops, exprs, object: &env.quantum.name };
    Ok(match cond {
        Cond::Classical { .. } => classical_constraint(at, program, cond, env, polarity)?,
        Cond::Measure { qubits, outcomes } => measure_constraint(at, qubits, outcomes, polarity)?,
        Cond::StateEq { dist, delta } => eq_constraint(at, dist, *delta, polarity),
        Cond::StateGt { pairs, delta } => gt_constraint(at, pairs, *delta, polarity),
        Cond::StateLt { pairs, delta } => lt_constraint(at, pairs, *delta, polarity),
    })
}

fn unicode_cmp(c: Cmp) -> &'static str {
    match c {
        Cmp::Eq => "=",
        Cmp::Ne => "≠",
        Cmp::Lt => "<",
        Cmp::Le => "≤",
        Cmp::Gt => ">",
        Cmp::Ge => "≥",
    }
}

/// Surface syntax used in logs: `alice_0 ≠ 1`, `sqc[h(1)][1] ∈ ["0"]`.
impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ops: Vec<String> = self.ops.iter().map(|o| o.to_string()).collect();
        let obj = format!("{}[{}]", self.object, ops.join(", "));
        match &self.params {
            AtomParams::Classical { lhs, cmp, rhs, .. } => {
                write!(f, "{} {} {}", crate::ir::expr_text(lhs), unicode_cmp(*cmp), crate::ir::expr_text(rhs))
            }
            AtomParams::Measure { qubits, outcomes, .. } => {
                let qs: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
                let os: Vec<String> = outcomes.iter().map(|o| format!("\"{o}\"")).collect();
                let rel = if self.kind == AtomKind::MeasureIn { "∈" } else { "∉" };
                write!(f, "{obj}[{}] {rel} [{}]", qs.join(","), os.join(", "))
            }
            AtomParams::Dist { dist, delta, .. } => {
                let rel = if self.kind == AtomKind::DistEq { "=" } else { "≠" };
                let items: Vec<String> = dist.iter().map(|(k, v)| format!("\"{k}\": {v}")).collect();
                write!(f, "{obj} {rel}δ{delta} {{{}}}", items.join(", "))
            }
            AtomParams::Bound { pairs, conjunctive } => {
                let rel = if self.kind == AtomKind::ProbGt { ">" } else { "≤" };
                let quant = if *conjunctive { "" } else { "any" };
                let items: Vec<String> = pairs.iter().map(|(o, _, b)| format!("(\"{o}\", {b})")).collect();
                write!(f, "{obj} {rel} {quant}[{}]", items.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, Gate};
    use crate::symbolic::{amplitude_exprs_at, symbolize};
    use num_complex::Complex64;

    fn site<'a>(ops: &'a [GateOp], n: usize) -> AtomSite<'a> {
        AtomSite { site: 0, ops, exprs: amplitude_exprs_at(ops, n), object: "sq" }
    }

    fn state(amps: &[(f64, f64)]) -> TestCase {
        TestCase {
            classical: BTreeMap::new(),
            initial_state: StateVector::from_amplitudes(amps.iter().map(|&(r, i)| Complex64::new(r, i)).collect())
                .unwrap(),
        }
    }

    #[test]
    fn measure_in_zeroes_outside_outcomes() {
        let a = measure_constraint(site(&[], 1), &[0], &["0".into()], true).unwrap();
        assert_eq!(a.kind, AtomKind::MeasureIn);
        assert_eq!(a.zeroed_amplitudes(), vec![1]);
    }

    #[test]
    fn measure_not_in_zeroes_inside_outcomes() {
        // S_r for qubit 0 = 1 on two qubits: indices with bit 0 set.
        let a = measure_constraint(site(&[], 2), &[0], &["1".into()], false).unwrap();
        assert_eq!(a.kind, AtomKind::MeasureNotIn);
        assert_eq!(a.zeroed_amplitudes(), vec![1, 3]);
    }

    #[test]
    fn measure_after_recorded_ops_zeroes_two_amplitudes() {
        let ops = [GateOp::new(Gate::X, &[1]), GateOp::new(Gate::Z, &[1]), GateOp::new(Gate::H, &[1])];
        let a = measure_constraint(site(&ops, 2), &[1], &["0".into()], true).unwrap();
        assert_eq!(a.zeroed_amplitudes(), vec![2, 3]);
        assert_eq!(a.to_string(), "sq[x(1), z(1), h(1)][1] ∈ [\"0\"]");
    }

    #[test]
    fn negating_a_covering_measure_fails() {
        let outcomes = ["0".to_string(), "1".to_string()];
        assert_eq!(
            measure_constraint(site(&[], 1), &[0], &outcomes, false),
            Err(ConstraintError::InfeasibleNegation(0))
        );
    }

    #[test]
    fn distribution_atoms() {
        let dist: OutcomeMap = [("0".to_string(), 0.5), ("1".to_string(), 0.5)].into();
        let eq = eq_constraint(site(&[], 1), &dist, 0.01, true);
        assert_eq!(eq.kind, AtomKind::DistEq);
        let neq = eq_constraint(site(&[], 1), &dist, 0.01, false);
        assert_eq!(neq.kind, AtomKind::DistNeq);
        let plus = state(&[(std::f64::consts::FRAC_1_SQRT_2, 0.0), (0.0, std::f64::consts::FRAC_1_SQRT_2)]);
        assert_eq!(eq.violation(&plus), 0.0);
        assert!(neq.violation(&plus) > 0.0);
        let zero = state(&[(1.0, 0.0), (0.0, 0.0)]);
        assert!(eq.violation(&zero) > 0.0);
        assert_eq!(neq.violation(&zero), 0.0);
    }

    #[test]
    fn exact_bell_satisfies_eq_under_identity_prefix() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let dist: OutcomeMap = [("00".to_string(), 0.5), ("11".to_string(), 0.5)].into();
        let eq = eq_constraint(site(&[], 2), &dist, 0.01, true);
        assert_eq!(eq.violation(&state(&[(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)])), 0.0);
    }

    #[test]
    fn gt_and_lt_bounds() {
        let pairs = [("1".to_string(), 0.9)];
        let gt = gt_constraint(site(&[], 1), &pairs, 0.01, true);
        let AtomParams::Bound { pairs: b, .. } = &gt.params else { panic!() };
        assert!((b[0].2 - 0.89).abs() < 1e-15);
        let gt_false = gt_constraint(site(&[], 1), &pairs, 0.01, false);
        assert_eq!(gt_false.kind, AtomKind::ProbLe);
        let AtomParams::Bound { pairs: bf, .. } = &gt_false.params else { panic!() };
        assert_eq!(bf[0].2, b[0].2);
        let one = state(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(gt.violation(&one), 0.0);
        assert!(gt_false.violation(&one) > 0.1);

        let lt = lt_constraint(site(&[], 1), &[("0".to_string(), 0.1)], 0.005, true);
        let AtomParams::Bound { pairs: l, .. } = &lt.params else { panic!() };
        assert!((l[0].2 - 0.105).abs() < 1e-15);
        assert_eq!(lt.kind, AtomKind::ProbLe);
        assert_eq!(lt_constraint(site(&[], 1), &[("0".to_string(), 0.1)], 0.005, false).kind, AtomKind::ProbGt);
        assert_eq!(lt.violation(&one), 0.0);
    }

    #[test]
    fn classical_atoms() {
        let p = parse_program("program f(alice: int, q: qreg(1)) { if alice == 1 { } if 3 < 5 { } }").unwrap();
        let env = symbolize(&p);
        let a = atom_for(&p, &env, 0, &[], amplitude_exprs_at(&[], 1), false).unwrap();
        assert_eq!(a.to_string(), "alice_0 ≠ 1");
        let c = atom_for(&p, &env, 1, &[], amplitude_exprs_at(&[], 1), true).unwrap();
        assert_eq!(c.violation(&state(&[(1.0, 0.0), (0.0, 0.0)])), 0.0);

        let unbound = Cond::Classical { lhs: Expr::Var("bob".into()), cmp: Cmp::Eq, rhs: Expr::Int(1) };
        assert_eq!(
            classical_constraint(site(&[], 1), &p, &unbound, &env, true),
            Err(ConstraintError::UnboundSymbol("bob".into()))
        );
    }

    #[test]
    fn negation_is_an_involution() {
        let p = parse_program(
            "program f(a: int, q: qreg(1)) {
                if a >= 2 { }
                if measure(q, [0]) == [\"1\"] { }
                if check_state_eq(q, {\"0\": 1.0}, 0.01) { }
                if check_state_gt(q, {\"0\": 0.4, \"1\": 0.4}, 0.01) { }
                if check_state_lt(q, {\"0\": 0.4}, 0.01) { }
            }",
        )
        .unwrap();
        let env = symbolize(&p);
        let expected = [
            (AtomKind::ClassicalCmp, AtomKind::ClassicalCmp),
            (AtomKind::MeasureIn, AtomKind::MeasureNotIn),
            (AtomKind::DistEq, AtomKind::DistNeq),
            (AtomKind::ProbGt, AtomKind::ProbLe),
            (AtomKind::ProbLe, AtomKind::ProbGt),
        ];
        for (site, (k, nk)) in expected.into_iter().enumerate() {
            let a = atom_for(&p, &env, site, &[], amplitude_exprs_at(&[], 1), true).unwrap();
            let b = atom_for(&p, &env, site, &[], amplitude_exprs_at(&[], 1), false).unwrap();
            assert_eq!(a.kind, k);
            assert_eq!(negate(&a).kind, nk);
            assert_eq!(negate(&negate(&a)), a);
            assert_eq!(negate(&a), b, "site {site}");
        }
    }
}
