//! SMT-LIB2 emission, solver subprocesses, model parsing and test-case
//! extraction.

mod emit;
mod model;
mod solver;

pub use emit::{emit_smt, emit_smt_with, real, Declared, EmitOptions, PowerStyle, SmtDocument, SmtMode};
pub use model::{extract_raw, extract_test_case, parse_model, Assignment, ModelDialect, MIN_MODEL_NORM};
pub use solver::{classify, invoke_solver, Solver, SolverConfig, SolverKind, SolverVerdict, SubprocessSolver};

#[cfg(test)]
mod z3_tests {
    //! Runs only when a `z3` binary is on `PATH`.
    use super::*;
    use crate::constraint::{eq_constraint, measure_constraint, AtomSite, PathConstraint};
    use crate::ir::{parse_program, Gate, GateOp, OutcomeMap};
    use crate::symbolic::amplitude_exprs_at;

    fn z3() -> Option<SolverConfig> {
        std::process::Command::new("z3").arg("-version").output().ok().map(|_| SolverConfig::default())
    }

    #[test]
    fn normalization_only_is_sat() {
        let Some(cfg) = z3() else { return };
        let doc = emit_smt(&PathConstraint::default(), 1, SmtMode::Integrated);
        assert!(matches!(invoke_solver(&doc, &cfg), SolverVerdict::Sat(_)));
    }

    #[test]
    fn contradiction_is_unsat() {
        let Some(cfg) = z3() else { return };
        let ops: [GateOp; 0] = [];
        let at = |polarity| {
            let site = AtomSite { site: 0, ops: &ops, exprs: amplitude_exprs_at(&ops, 1), object: "sq" };
            measure_constraint(site, &[0], &["0".into()], polarity).unwrap()
        };
        let pc = PathConstraint { atoms: vec![at(true), at(false)] };
        assert_eq!(invoke_solver(&emit_smt(&pc, 1, SmtMode::Integrated), &cfg), SolverVerdict::Unsat);
    }

    #[test]
    fn solved_bell_model_is_usable() {
        let Some(cfg) = z3() else { return };
        let p = parse_program("program f(q: qreg(2)) { }").unwrap();
        let ops = [GateOp::new(Gate::H, &[0])];
        let dist: OutcomeMap = [("01".to_string(), 0.5), ("11".to_string(), 0.5)].into();
        let site = AtomSite { site: 0, ops: &ops, exprs: amplitude_exprs_at(&ops, 2), object: "sq" };
        let pc = PathConstraint { atoms: vec![eq_constraint(site, &dist, 0.01, true)] };
        for mode in [SmtMode::Integrated, SmtMode::PerOp] {
            let v = invoke_solver(&emit_smt(&pc, 2, mode), &cfg);
            let tc = extract_test_case(v.model().expect("sat"), &p).unwrap();
            assert!(pc.violation(&tc) <= 0.01, "{mode:?}");
        }
    }
}
