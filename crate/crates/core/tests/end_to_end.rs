use qconcolic_core::driver::{run_concolic, BranchRef, Config, Termination};
use qconcolic_core::parse_program;
use qconcolic_core::smt::{SolverConfig, SubprocessSolver};

fn z3() -> Option<SubprocessSolver> {
    std::process::Command::new("z3").arg("-version").output().ok()?;
    Some(SubprocessSolver::new(SolverConfig::default()))
}

#[test]
fn teleport_reaches_every_branch() {
    let Some(solver) = z3() else { return };
    let p = parse_program(include_str!("../../../programs/teleport.qcp")).unwrap();
    let cfg = Config { max_iters: 20, seed: 1, ..Config::default() };
    let rep = run_concolic(&p, &cfg, &solver).unwrap();
    println!("{}", rep.to_json());
    assert_eq!(rep.coverage.ratio, 1.0);
    assert!(rep.unsat_branches.is_empty());
    assert_eq!(rep.results.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
    assert!(rep.cases.iter().any(|c| c.test_case.classical["alice"].as_f64() != 0.0));
    assert_eq!(rep.termination, Termination::Exhausted);
}

#[test]
fn measurement_collapse_bug_is_an_unsat_branch() {
    let Some(solver) = z3() else { return };
    let p = parse_program(include_str!("../../../programs/mi_bug.qcp")).unwrap();
    let rep = run_concolic(&p, &Config::default(), &solver).unwrap();
    assert_eq!(rep.unsat_branches, vec![BranchRef { site: 1, polarity: true }]);
    assert_eq!(rep.coverage.feasible_ratio, 1.0);
}

#[test]
fn bell_check_scores_quality() {
    let Some(solver) = z3() else { return };
    let p = parse_program(include_str!("../../../programs/bell_check.qcp")).unwrap();
    let rep = run_concolic(&p, &Config::default(), &solver).unwrap();
    println!("{}", rep.to_json());
    assert_eq!(rep.coverage.feasible_ratio, 1.0);
    assert!(!rep.quality.is_empty());
    assert!(rep.quality.iter().all(|q| q.quality <= 4.0 * (0.01 + 0.05)));
}
