use std::fmt;

use serde::{Deserialize, Serialize};

use super::atom::{atom_for, Atom};
use crate::error::ConstraintError;
use crate::ir::Program;
use crate::sim::Trace;
use crate::symbolic::{AmplitudeExprs, SymbolicEnv, UnitaryMatrix};

/// Conjunction of atoms, one per conditional on a path.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PathConstraint {
    pub atoms: Vec<Atom>,
}

impl PathConstraint {
    pub fn path(&self) -> Vec<(usize, bool)> {
        self.atoms.iter().map(|a| (a.site, a.polarity)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Largest violation over all atoms for a candidate input.
    pub fn violation(&self, tc: &crate::testcase::TestCase) -> f64 {
        self.atoms.iter().map(|a| a.violation(tc)).fold(0.0, f64::max)
    }
}

impl fmt::Display for PathConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join(" ∧ "))
    }
}

/// One atom per step of `trace`, each over the gates executed before it.
pub fn path_condition(program: &Program, env: &SymbolicEnv, trace: &Trace) -> Result<PathConstraint, ConstraintError> {
    let n = program.n();
    let mut u = UnitaryMatrix::identity(n);
    let mut done = 0;
    let mut atoms = Vec::with_capacity(trace.steps.len());
    for (k, step) in trace.steps.iter().enumerate() {
        let ops = trace.prefix_ops(k);
        for op in &ops[done..] {
            u = u.then(op);
        }
        done = ops.len();
        let exprs = AmplitudeExprs::from_unitary(&u);
        atoms.push(atom_for(program, env, step.site, ops, exprs, step.polarity)?);
    }
    Ok(PathConstraint { atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::AtomKind;
    use crate::ir::parse_program;
    use crate::sim::execute_concrete;
    use crate::symbolic::{amplitude_exprs_at, symbolize};
    use crate::testcase::TestCase;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn teleport_path_from_zero_input() {
        let p = parse_program(include_str!("../../../../programs/teleport.qcp")).unwrap();
        let env = symbolize(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = execute_concrete(&p, &TestCase::initial(&p).unwrap(), &mut rng).unwrap();
        let pc = path_condition(&p, &env, &run.trace).unwrap();
        assert_eq!(pc.atoms.len(), 3);
        assert_eq!(pc.path(), run.trace.path());
        assert_eq!(pc.atoms[0].kind, AtomKind::MeasureNotIn);
        assert_eq!(pc.atoms[1].to_string(), "alice_0 ≠ 1");
        assert_eq!(pc.atoms[2].prefix_len(), 1);
        assert_eq!(pc.atoms[2].exprs, amplitude_exprs_at(run.trace.prefix_ops(2), 2));
        // |00> measures deterministically at the first site; the final
        // measurement follows an h and is a coin flip.
        let zero = TestCase::initial(&p).unwrap();
        assert_eq!(pc.atoms[0].violation(&zero), 0.0);
        assert_eq!(pc.atoms[1].violation(&zero), 0.0);
        assert!((pc.atoms[2].violation(&zero) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(pc.to_string().contains(" ∧ "));
    }

    #[test]
    fn no_conditionals_means_true() {
        let p = parse_program("program f(q: qreg(1)) { h(q, 0); }").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let run = execute_concrete(&p, &TestCase::initial(&p).unwrap(), &mut rng).unwrap();
        let pc = path_condition(&p, &symbolize(&p), &run.trace).unwrap();
        assert!(pc.is_empty());
        assert_eq!(pc.to_string(), "true");
    }
}
