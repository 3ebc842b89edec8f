//! The concolic loop: execute, record the path, flip the deepest open
//! branch, solve for a new input, and retry with exclusions on a miss.

mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{path_condition, AtomKind, ForkTree, PathConstraint, Target};
use crate::error::{Error, ParseError, Result, SolverError};
use crate::ir::{validate_program, Program};
use crate::sim::execute_concrete;
use crate::smt::{emit_smt_with, extract_test_case, EmitOptions, SmtMode, Solver, SolverConfig, SolverVerdict};
use crate::symbolic::{symbolize, SymbolicEnv};
use crate::testcase::TestCase;

pub use report::{
    branch_coverage, quality, BranchRef, CaseOrigin, CaseRecord, Coverage, Observer, QualityEntry, Report, RunRecord,
    SolverCall, Termination, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Solver-targeted iterations after the initial case.
    pub max_iters: usize,
    /// Executions per candidate.
    pub repeats: usize,
    pub solver: SolverConfig,
    pub seed: u64,
    pub smt_mode: SmtMode,
    pub emit_logic: bool,
    /// Stop once every one of these return values was observed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_results: Option<BTreeSet<i64>>,
    /// Re-solves with an exclusion before a target is abandoned.
    pub max_refinements: usize,
    /// Half-width added around point models before excluding them.
    pub exclusion_radius: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_iters: 50,
            repeats: 10,
            solver: SolverConfig::default(),
            seed: 0,
            smt_mode: SmtMode::Integrated,
            emit_logic: true,
            expected_results: None,
            max_refinements: 5,
            exclusion_radius: 1e-3,
        }
    }
}

impl Config {
    pub fn emit_options(&self) -> EmitOptions {
        self.solver.kind.emit_options(self.smt_mode, self.emit_logic)
    }
}

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

struct Explorer<'a> {
    program: &'a Program,
    env: SymbolicEnv,
    cfg: &'a Config,
    rng: ChaCha8Rng,
    tree: ForkTree,
    obs: Observer,
    quality: Vec<QualityEntry>,
    calls: Vec<SolverCall>,
}

impl Explorer<'_> {
    /// Runs `tc` up to `repeats` times, stopping once a run follows
    /// `target_path`. Returns whether the target was reached.
    fn execute(
        &mut self,
        tc: &TestCase,
        origin: CaseOrigin,
        target: Option<(&[(usize, bool)], Target)>,
    ) -> Result<bool> {
        let mut runs = Vec::new();
        let mut novel = false;
        let mut hit_run = None;
        for _ in 0..self.cfg.repeats {
            let exec = execute_concrete(self.program, tc, &mut self.rng)?;
            let pc = path_condition(self.program, &self.env, &exec.trace)?;
            self.tree.update(&pc);
            novel |= self.obs.observe(&exec.trace);
            runs.push(RunRecord::from_trace(&exec.trace));
            if let Some((path, _)) = target {
                if exec.trace.path().starts_with(path) {
                    hit_run = Some(exec.trace);
                    break;
                }
            }
        }
        if !novel {
            return Ok(hit_run.is_some());
        }
        let target_ref = target.map(|(path, _)| BranchRef::from(*path.last().expect("target path is non-empty")));
        let case = self.obs.accept(CaseRecord { origin, target: target_ref, test_case: tc.clone(), runs });
        if let (Some((path, t)), Some(trace)) = (target, &hit_run) {
            if self.tree.nodes[t.node].atom_for(t.polarity).kind == AtomKind::DistEq {
                let k = path.len() - 1;
                if let Some(gap) = trace.steps[k].dist_gap {
                    self.quality.push(QualityEntry { case, site: trace.steps[k].site, quality: gap });
                }
            }
        }
        Ok(hit_run.is_some())
    }

    fn target_path(&self, t: Target) -> Vec<(usize, bool)> {
        let mut path = vec![(self.tree.nodes[t.node].site, t.polarity)];
        let mut cur = self.tree.nodes[t.node].parent;
        while let Some((id, pol)) = cur {
            path.push((self.tree.nodes[id].site, pol));
            cur = self.tree.nodes[id].parent;
        }
        path.reverse();
        path
    }

    fn attempt(&mut self, iteration: usize, t: Target, solver: &dyn Solver) -> Result<()> {
        let pc: PathConstraint = self.tree.target_constraint(t);
        let path = self.target_path(t);
        let target = BranchRef::from(*path.last().unwrap());
        log::info!("iteration {iteration}: target {target:?}: {pc}");
        let mut doc = emit_smt_with(&pc, self.program.n(), self.cfg.emit_options());
        for refinement in 0..=self.cfg.max_refinements {
            let start = Instant::now();
            let verdict = solver.solve(&doc);
            let seconds = start.elapsed().as_secs_f64();
            let mut call = SolverCall {
                iteration,
                target,
                refinement,
                verdict: verdict.label().into(),
                violation: None,
                hit: false,
                rejected: false,
                seconds,
            };
            let model = match verdict {
                SolverVerdict::Unsat => {
                    self.calls.push(call);
                    self.tree.mark_unsat(t);
                    return Ok(());
                }
                SolverVerdict::Timeout => {
                    self.calls.push(call);
                    self.tree.mark_abandoned(t);
                    return Ok(());
                }
                SolverVerdict::SolverError(msg) => {
                    self.calls.push(call);
                    return Err(SolverError::Failed(msg).into());
                }
                SolverVerdict::Sat(a) | SolverVerdict::DeltaSat(a) => a,
            };
            if doc.is_excluded(&model) {
                log::warn!("solver returned a box inside an excluded region");
                call.rejected = true;
                self.calls.push(call);
                break;
            }
            match extract_test_case(&model, self.program) {
                Ok(tc) => {
                    call.violation = Some(pc.violation(&tc));
                    call.hit = self.execute(&tc, CaseOrigin::Solver, Some((&path, t)))?;
                    let hit = call.hit;
                    self.calls.push(call);
                    if hit {
                        return Ok(());
                    }
                }
                Err(SolverError::DegenerateModel(norm)) => {
                    log::debug!("degenerate model (norm {norm:e})");
                    self.calls.push(call);
                }
                Err(e) => return Err(e.into()),
            }
            doc = doc.add_exclusion(&model.widened(self.cfg.exclusion_radius));
        }
        // The side may still have been reached by an accepted run.
        if self.tree.nodes[t.node].is_open(t.polarity) {
            self.tree.mark_abandoned(t);
        }
        Ok(())
    }

    fn unsat_everywhere(&self) -> BTreeSet<BranchRef> {
        let mut out = BTreeSet::new();
        for s in &self.program.branch_sites {
            let nodes: Vec<_> = self.tree.nodes.iter().filter(|n| n.site == s.id).collect();
            for polarity in [false, true] {
                if !nodes.is_empty() && nodes.iter().all(|n| n.unsat[polarity as usize]) {
                    out.insert(BranchRef { site: s.id, polarity });
                }
            }
        }
        out
    }

    fn results_done(&self) -> bool {
        self.cfg.expected_results.as_ref().is_some_and(|want| want.is_subset(&self.obs.results))
    }
}

/// Explores `p` from the all-zero input until the fork tree is exhausted,
/// the expected results are seen, or `max_iters` solver targets were tried.
pub fn run_concolic(p: &Program, cfg: &Config, solver: &dyn Solver) -> Result<Report> {
    let report = validate_program(p);
    if !report.violations.is_empty() {
        return Err(Error::Parse(ParseError::Validation(report.violations.iter().map(|v| v.to_string()).collect())));
    }
    if cfg.repeats == 0 {
        return Err(Error::Sim(crate::error::SimError::RuntimeType("repeats must be at least 1".into())));
    }
    let mut ex = Explorer {
        program: p,
        env: symbolize(p),
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        tree: ForkTree::new(),
        obs: Observer::default(),
        quality: Vec::new(),
        calls: Vec::new(),
    };
    ex.execute(&TestCase::initial(p)?, CaseOrigin::Initial, None)?;

    let mut iterations = 0;
    let termination = loop {
        if ex.results_done() {
            break Termination::ResultsCovered;
        }
        let Some(t) = ex.tree.select_target() else {
            break Termination::Exhausted;
        };
        if iterations >= cfg.max_iters {
            break Termination::IterationLimit;
        }
        iterations += 1;
        ex.attempt(iterations, t, solver)?;
    };

    let unsat = ex.unsat_everywhere();
    let infeasible = ex.obs.infeasible(p, &unsat);
    let coverage = Coverage::compute(p, &ex.obs.covered, &infeasible);
    let unsat_branches = unsat.into_iter().filter(|b| !ex.obs.covered.contains(b)).collect();
    let solver_seconds = ex.calls.iter().map(|c| c.seconds).sum();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: tool_version(),
        program: p.name.clone(),
        method: "concolic".into(),
        config: cfg.clone(),
        cases: ex.obs.cases,
        coverage,
        unsat_branches,
        quality: ex.quality,
        solver_calls: ex.calls,
        solver_seconds,
        iterations,
        results: ex.obs.results,
        termination,
    })
}
