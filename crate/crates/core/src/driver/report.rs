use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Config;
use crate::ir::{OutcomeMap, Program};
use crate::sim::{distribution_gaps, StateVector, Trace};
use crate::testcase::TestCase;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BranchRef {
    pub site: usize,
    pub polarity: bool,
}

impl From<(usize, bool)> for BranchRef {
    fn from((site, polarity): (usize, bool)) -> Self {
        BranchRef { site, polarity }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub path: Vec<BranchRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<Option<String>>,
    pub result: Option<i64>,
}

impl RunRecord {
    pub fn from_trace(t: &Trace) -> Self {
        RunRecord {
            path: t.path().into_iter().map(BranchRef::from).collect(),
            outcomes: if t.steps.iter().any(|s| s.outcome.is_some()) {
                t.steps.iter().map(|s| s.outcome.clone()).collect()
            } else {
                Vec::new()
            },
            result: t.result,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseOrigin {
    Initial,
    Solver,
    Baseline,
}

/// An accepted input with the runs made on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub origin: CaseOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BranchRef>,
    pub test_case: TestCase,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: Vec<BranchRef>,
    /// `2 ×` branch sites.
    pub total: usize,
    pub ratio: f64,
    /// `total` minus pairs proven unreachable.
    pub feasible_total: usize,
    pub feasible_ratio: f64,
}

impl Coverage {
    pub fn compute(p: &Program, covered: &BTreeSet<BranchRef>, infeasible: &BTreeSet<BranchRef>) -> Coverage {
        let total = 2 * p.branch_sites.len();
        let feasible_total = total - infeasible.iter().filter(|b| !covered.contains(b)).count();
        let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
        Coverage {
            covered: covered.iter().copied().collect(),
            total,
            ratio: ratio(covered.len(), total),
            feasible_total,
            feasible_ratio: ratio(covered.len().min(feasible_total), feasible_total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityEntry {
    /// Index into `cases`.
    pub case: usize,
    pub site: usize,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverCall {
    pub iteration: usize,
    pub target: BranchRef,
    pub refinement: usize,
    pub verdict: String,
    /// Largest atom violation of the extracted, renormalized case.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub violation: Option<f64>,
    #[serde(default)]
    pub hit: bool,
    /// The model fell inside an excluded box.
    #[serde(default)]
    pub rejected: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// No open branch side remains in the fork tree.
    Exhausted,
    /// Every expected return value was observed.
    ResultsCovered,
    IterationLimit,
    /// Baseline sampling budget spent.
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    pub program: String,
    pub method: String,
    pub config: Config,
    pub cases: Vec<CaseRecord>,
    pub coverage: Coverage,
    pub unsat_branches: Vec<BranchRef>,
    pub quality: Vec<QualityEntry>,
    pub solver_calls: Vec<SolverCall>,
    pub solver_seconds: f64,
    pub iterations: usize,
    pub results: BTreeSet<i64>,
    pub termination: Termination,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn mean_quality(&self) -> Option<f64> {
        (!self.quality.is_empty())
            .then(|| self.quality.iter().map(|q| q.quality).sum::<f64>() / self.quality.len() as f64)
    }

    /// Copy with wall-clock fields zeroed, for comparing runs.
    pub fn without_timings(&self) -> Report {
        let mut r = self.clone();
        r.solver_seconds = 0.0;
        for c in &mut r.solver_calls {
            c.seconds = 0.0;
        }
        r
    }
}

/// Covered `(site, polarity)` pairs over `2 ×` site count; 1 for a program
/// without conditionals.
pub fn branch_coverage(rep: &Report, p: &Program) -> f64 {
    let total = 2 * p.branch_sites.len();
    if total == 0 {
        return 1.0;
    }
    rep.coverage.covered.len() as f64 / total as f64
}

/// `Σ_x |⟨x|φ⟩|² − D_x|`, missing entries of `D` read as 0.
pub fn quality(final_state: &StateVector, dist: &OutcomeMap) -> f64 {
    distribution_gaps(&final_state.basis_probabilities(), dist, final_state.n()).iter().sum()
}

/// Accumulates runs into accepted cases and coverage; shared by the concolic
/// loop and the baselines.
#[derive(Debug, Default)]
pub struct Observer {
    pub seen: BTreeSet<(Vec<BranchRef>, Option<i64>)>,
    pub covered: BTreeSet<BranchRef>,
    pub results: BTreeSet<i64>,
    pub cases: Vec<CaseRecord>,
}

impl Observer {
    /// Records a run; true when its full trace is new.
    pub fn observe(&mut self, t: &Trace) -> bool {
        let rec = RunRecord::from_trace(t);
        self.covered.extend(rec.path.iter().copied());
        if let Some(r) = t.result {
            self.results.insert(r);
        }
        self.seen.insert((rec.path, t.result))
    }

    pub fn accept(&mut self, case: CaseRecord) -> usize {
        self.cases.push(case);
        self.cases.len() - 1
    }

    /// Infeasible pairs: uncovered sides proven unsat at every fork node of
    /// their site, plus everything nested under an infeasible side.
    pub fn infeasible(&self, p: &Program, unsat_everywhere: &BTreeSet<BranchRef>) -> BTreeSet<BranchRef> {
        let mut out: BTreeSet<BranchRef> =
            unsat_everywhere.iter().filter(|b| !self.covered.contains(b)).copied().collect();
        let mut changed = true;
        while changed {
            changed = false;
            for s in &p.branch_sites {
                let Some(parent) = s.parent else { continue };
                if out.contains(&BranchRef::from(parent)) {
                    for polarity in [false, true] {
                        let b = BranchRef { site: s.id, polarity };
                        if !self.covered.contains(&b) {
                            changed |= out.insert(b);
                        }
                    }
                }
            }
        }
        out
    }
}
