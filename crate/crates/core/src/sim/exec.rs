use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::StateVector;
use crate::error::SimError;
use crate::ir::{outcome_index, BinOp, Block, Cond, Expr, GateOp, OutcomeMap, ParamKind, Program, Stmt};
use crate::testcase::{TestCase, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub site: usize,
    pub polarity: bool,
    /// Realized outcome of a measurement conditional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    /// `Σ_x |p_x − D_x|` at a `check_state_eq` conditional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    /// Gates executed before each step.
    pub ops_prefix: Vec<usize>,
    /// Gates executed along the path, in order.
    pub operations: Vec<GateOp>,
    pub result: Option<i64>,
}

impl Trace {
    /// The (site, polarity) decisions of this path.
    pub fn path(&self) -> Vec<(usize, bool)> {
        self.steps.iter().map(|s| (s.site, s.polarity)).collect()
    }

    /// Gates executed before step `k`.
    pub fn prefix_ops(&self, k: usize) -> &[GateOp] {
        &self.operations[..self.ops_prefix[k]]
    }
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub trace: Trace,
    pub final_state: StateVector,
}

/// Runs `p` on `tc`, sampling measurements from `rng`.
pub fn execute_concrete<R: Rng + ?Sized>(p: &Program, tc: &TestCase, rng: &mut R) -> Result<Execution, SimError> {
    if tc.initial_state.n() != p.n() {
        return Err(SimError::RuntimeType(format!(
            "test case has {} qubits, program expects {}",
            tc.initial_state.n(),
            p.n()
        )));
    }
    let mut env = BTreeMap::new();
    for param in p.classical_params() {
        let v = tc
            .classical
            .get(&param.name)
            .copied()
            .ok_or_else(|| SimError::RuntimeType(format!("missing value for `{}`", param.name)))?;
        let v = match (param.kind, v) {
            (ParamKind::Int, Value::Int(_)) | (ParamKind::Real, Value::Real(_)) => v,
            (ParamKind::Real, Value::Int(i)) => Value::Real(i as f64),
            _ => return Err(SimError::RuntimeType(format!("`{}` expects an integer, got {v}", param.name))),
        };
        env.insert(param.name.clone(), v);
    }
    let mut interp = Interpreter {
        env,
        state: tc.initial_state.clone(),
        rng,
        trace: Trace { steps: Vec::new(), ops_prefix: Vec::new(), operations: Vec::new(), result: None },
        n: p.n(),
    };
    if let Flow::Return(v) = interp.block(&p.body)? {
        interp.trace.result = Some(v);
    }
    Ok(Execution { trace: interp.trace, final_state: interp.state })
}

enum Flow {
    Next,
    Return(i64),
}

struct Interpreter<'r, R: ?Sized> {
    env: BTreeMap<String, Value>,
    state: StateVector,
    rng: &'r mut R,
    trace: Trace,
    n: usize,
}

impl<R: Rng + ?Sized> Interpreter<'_, R> {
    fn block(&mut self, block: &Block) -> Result<Flow, SimError> {
        for stmt in block {
            match stmt {
                Stmt::Gate(op, _) => {
                    self.state.apply_in_place(op)?;
                    self.trace.operations.push(op.clone());
                }
                Stmt::Return(e, _) => {
                    return match eval_expr(e, &self.env)? {
                        Value::Int(i) => Ok(Flow::Return(i)),
                        v => Err(SimError::RuntimeType(format!("return value {v} is not an integer"))),
                    };
                }
                Stmt::If { site, cond, then_block, else_block, .. } => {
                    let ops_before = self.trace.operations.len();
                    let mut step = self.condition(cond)?;
                    step.site = *site;
                    let taken = step.polarity;
                    self.trace.steps.push(step);
                    self.trace.ops_prefix.push(ops_before);
                    let flow = self.block(if taken { then_block } else { else_block })?;
                    if let Flow::Return(_) = flow {
                        return Ok(flow);
                    }
                }
            }
        }
        Ok(Flow::Next)
    }

    fn condition(&mut self, cond: &Cond) -> Result<TraceStep, SimError> {
        let mut step = TraceStep { site: 0, polarity: false, outcome: None, dist_gap: None };
        match cond {
            Cond::Classical { lhs, cmp, rhs } => {
                let (l, r) = (eval_expr(lhs, &self.env)?, eval_expr(rhs, &self.env)?);
                step.polarity = match (l, r) {
                    (Value::Int(a), Value::Int(b)) => cmp.holds(a, b),
                    _ => cmp.holds(l.as_f64(), r.as_f64()),
                };
            }
            Cond::Measure { qubits, outcomes } => {
                let (outcome, post) = self.state.measure_sample(qubits, &mut *self.rng)?;
                step.polarity = outcomes.contains(&outcome);
                step.outcome = Some(outcome);
                self.state = post;
            }
            Cond::StateEq { dist, delta } => {
                let probs = self.state.basis_probabilities();
                let gaps = distribution_gaps(&probs, dist, self.n);
                step.polarity = gaps.iter().all(|g| *g < *delta);
                step.dist_gap = Some(gaps.iter().sum());
            }
            Cond::StateGt { pairs, delta } => {
                let probs = self.state.basis_probabilities();
                step.polarity = pairs.iter().all(|(o, p)| prob_of(&probs, o) > p - delta);
            }
            Cond::StateLt { pairs, delta } => {
                let probs = self.state.basis_probabilities();
                step.polarity = pairs.iter().all(|(o, p)| prob_of(&probs, o) <= p + delta);
            }
        }
        Ok(step)
    }
}

fn prob_of(probs: &[f64], outcome: &str) -> f64 {
    outcome_index(outcome).and_then(|i| probs.get(i)).copied().unwrap_or(0.0)
}

/// `|p_x − D_x|` per basis index; missing entries of `dist` read as 0.
pub fn distribution_gaps(probs: &[f64], dist: &OutcomeMap, n: usize) -> Vec<f64> {
    let mut target = vec![0.0; 1 << n];
    for (o, p) in dist {
        if let Some(i) = outcome_index(o).filter(|&i| i < target.len()) {
            target[i] = *p;
        }
    }
    probs.iter().zip(&target).map(|(p, d)| (p - d).abs()).collect()
}

pub fn eval_expr(e: &Expr, env: &BTreeMap<String, Value>) -> Result<Value, SimError> {
    Ok(match e {
        Expr::Int(i) => Value::Int(*i),
        Expr::Real(x) => Value::Real(*x),
        Expr::Var(v) => *env.get(v).ok_or_else(|| SimError::RuntimeType(format!("unbound name `{v}`")))?,
        Expr::Neg(inner) => match eval_expr(inner, env)? {
            Value::Int(i) => {
                Value::Int(i.checked_neg().ok_or_else(|| SimError::RuntimeType("integer overflow".into()))?)
            }
            Value::Real(x) => Value::Real(-x),
        },
        Expr::Bin(op, l, r) => {
            let (l, r) = (eval_expr(l, env)?, eval_expr(r, env)?);
            match (l, r) {
                (Value::Int(a), Value::Int(b)) => {
                    let v = match op {
                        BinOp::Add => a.checked_add(b),
                        BinOp::Sub => a.checked_sub(b),
                        BinOp::Mul => a.checked_mul(b),
                    };
                    Value::Int(v.ok_or_else(|| SimError::RuntimeType("integer overflow".into()))?)
                }
                _ => {
                    let (a, b) = (l.as_f64(), r.as_f64());
                    Value::Real(match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                    })
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TELEPORT: &str = include_str!("../../../../programs/teleport.qcp");

    #[test]
    fn teleport_first_run_matches_measurements() {
        let p = parse_program(TELEPORT).unwrap();
        let tc = TestCase::initial(&p).unwrap();
        let mut seen = [false; 2];
        for seed in 0..40 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = execute_concrete(&p, &tc, &mut rng).unwrap();
            let path = run.trace.path();
            // |00>: qubit 0 reads 0, alice is 0, then h(1) makes the last read a coin flip.
            assert_eq!(&path[..2], &[(0, false), (1, false)]);
            assert_eq!(run.trace.ops_prefix, vec![0, 0, 1]);
            let third = path[2].1;
            assert_eq!(run.trace.result, Some(if third { 0 } else { 1 }));
            seen[third as usize] = true;
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn straight_line_program_has_no_steps() {
        let p = parse_program("program f(q: qreg(1)) { h(q, 0); return 7; }").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = execute_concrete(&p, &TestCase::initial(&p).unwrap(), &mut rng).unwrap();
        assert!(run.trace.steps.is_empty());
        assert_eq!(run.trace.result, Some(7));
        assert_eq!(run.trace.operations.len(), 1);
    }

    #[test]
    fn state_eq_is_analytic_on_exact_bell() {
        let p = parse_program(
            "program f(q: qreg(2)) {
                h(q, 0); cx(q, 0, 1);
                if check_state_eq(q, {\"00\": 0.5, \"11\": 0.5}, 0.01) { return 1; }
                return 0;
            }",
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let run = execute_concrete(&p, &TestCase::initial(&p).unwrap(), &mut rng).unwrap();
            assert!(run.trace.steps[0].polarity);
            assert!(run.trace.steps[0].dist_gap.unwrap() < 1e-12);
            assert_eq!(run.trace.ops_prefix, vec![2]);
        }
    }

    #[test]
    fn bounds_use_strict_lower_and_inclusive_upper() {
        let src = "program f(q: qreg(1)) {
            if check_state_gt(q, {\"1\": 0.9}, 0.01) { return 1; }
            if check_state_lt(q, {\"0\": 0.1}, 0.005) { return 2; }
            return 0;
        }";
        let p = parse_program(src).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let one = TestCase {
            classical: BTreeMap::new(),
            initial_state: StateVector::from_amplitudes(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
                .unwrap(),
        };
        assert_eq!(execute_concrete(&p, &one, &mut rng).unwrap().trace.result, Some(1));
        let zero = TestCase::initial(&p).unwrap();
        assert_eq!(execute_concrete(&p, &zero, &mut rng).unwrap().trace.path(), vec![(0, false), (1, false)]);
    }

    #[test]
    fn same_seed_same_trace() {
        let p = parse_program(TELEPORT).unwrap();
        let tc = TestCase::initial(&p).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| execute_concrete(&p, &tc, &mut rng).unwrap().trace).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn type_errors() {
        let p = parse_program(TELEPORT).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut tc = TestCase::initial(&p).unwrap();
        tc.classical.insert("alice".into(), Value::Real(0.5));
        assert!(matches!(execute_concrete(&p, &tc, &mut rng), Err(SimError::RuntimeType(_))));
        let mut tc = TestCase::initial(&p).unwrap();
        tc.initial_state = StateVector::zero(1).unwrap();
        assert!(execute_concrete(&p, &tc, &mut rng).is_err());
    }
}
