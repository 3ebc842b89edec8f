use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::driver::{
    tool_version, CaseOrigin, CaseRecord, Config, Coverage, Observer, QualityEntry, Report, RunRecord, Termination,
    SCHEMA_VERSION,
};
use crate::error::Result;
use crate::ir::{Gate, GateOp, ParamKind, Program};
use crate::sim::{execute_concrete, StateVector};
use crate::testcase::{TestCase, Value};

/// Classical parameters are drawn uniformly from this inclusive range.
pub const CLASSICAL_RANGE: (i64, i64) = (0, 7);
pub const DEFAULT_CIRCUIT_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineGen {
    /// Gaussian amplitudes, normalized.
    Vector,
    /// Random gates applied to `|0…0⟩`.
    Circuit { depth: usize },
}

impl BaselineGen {
    pub fn name(self) -> &'static str {
        match self {
            BaselineGen::Vector => "vector",
            BaselineGen::Circuit { .. } => "circuit",
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, n: usize, rng: &mut R) -> StateVector {
        match self {
            BaselineGen::Vector => random_state(n, rng),
            BaselineGen::Circuit { depth } => random_circuit_input(n, depth, rng),
        }
    }
}

/// Haar-random direction: independent standard Gaussians for every real and
/// imaginary part, then normalized.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    loop {
        let amps: Vec<Complex64> =
            (0..1usize << n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let s = StateVector::from_amplitudes(amps).expect("n within capacity");
        if let Some(unit) = s.normalized(1e-12) {
            return unit;
        }
    }
}

/// `2n · depth` gates drawn uniformly from those that fit, with angles
/// uniform in `[0, 2π)`, applied to `|0…0⟩`.
pub fn random_circuit_input<R: Rng + ?Sized>(n: usize, depth: usize, rng: &mut R) -> StateVector {
    let usable: Vec<Gate> = Gate::ALL.into_iter().filter(|g| g.arity() <= n).collect();
    let mut s = StateVector::zero(n).expect("n within capacity");
    for _ in 0..2 * n * depth {
        let g = *usable.choose(rng).unwrap();
        let qubits = rand::seq::index::sample(rng, n, g.arity()).into_vec();
        let angles: Vec<f64> = (0..g.angle_count()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        s.apply_in_place(&GateOp::with_angles(g, &qubits, &angles)).expect("qubits in range");
    }
    s
}

fn random_case<R: Rng + ?Sized>(p: &Program, gen: BaselineGen, rng: &mut R) -> TestCase {
    let classical = p
        .classical_params()
        .map(|param| {
            let v = match param.kind {
                ParamKind::Real => Value::Real(rng.random_range(CLASSICAL_RANGE.0 as f64..=CLASSICAL_RANGE.1 as f64)),
                _ => Value::Int(rng.random_range(CLASSICAL_RANGE.0..=CLASSICAL_RANGE.1)),
            };
            (param.name.clone(), v)
        })
        .collect();
    TestCase { classical, initial_state: gen.sample(p.n(), rng) }
}

/// Draws `budget` random inputs and runs each `repeats` times. Sample `i`
/// uses its own ChaCha stream, so results do not depend on evaluation order.
pub fn run_baseline<R: Rng + ?Sized>(
    p: &Program,
    gen: BaselineGen,
    budget: usize,
    repeats: usize,
    rng: &mut R,
) -> Result<Report> {
    let seed: u64 = rng.random();
    let cases = (0..budget).map(|i| {
        let mut sample_rng = ChaCha8Rng::seed_from_u64(seed);
        sample_rng.set_stream(i as u64);
        let tc = random_case(p, gen, &mut sample_rng);
        (tc, sample_rng)
    });
    let mut rep = run_cases(p, cases, repeats, CaseOrigin::Baseline)?;
    rep.method = gen.name().into();
    rep.config.max_iters = budget;
    rep.config.seed = seed;
    Ok(rep)
}

/// Runs externally supplied inputs, reporting like a baseline.
pub fn run_inputs(p: &Program, inputs: &[TestCase], repeats: usize, seed: u64) -> Result<Report> {
    let cases = inputs.iter().enumerate().map(|(i, tc)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        (tc.clone(), rng)
    });
    let mut rep = run_cases(p, cases, repeats, CaseOrigin::Baseline)?;
    rep.method = "external".into();
    rep.config.max_iters = inputs.len();
    rep.config.seed = seed;
    Ok(rep)
}

fn run_cases(
    p: &Program,
    cases: impl Iterator<Item = (TestCase, ChaCha8Rng)>,
    repeats: usize,
    origin: CaseOrigin,
) -> Result<Report> {
    let mut obs = Observer::default();
    let mut quality = Vec::new();
    let mut count = 0;
    for (tc, mut rng) in cases {
        count += 1;
        let mut runs = Vec::new();
        let mut novel = false;
        let mut gap = None;
        for _ in 0..repeats.max(1) {
            let exec = execute_concrete(p, &tc, &mut rng)?;
            novel |= obs.observe(&exec.trace);
            if gap.is_none() {
                gap = exec.trace.steps.iter().find_map(|s| s.dist_gap.map(|g| (s.site, g)));
            }
            runs.push(RunRecord::from_trace(&exec.trace));
        }
        if novel {
            let case = obs.accept(CaseRecord { origin, target: None, test_case: tc, runs });
            if let Some((site, q)) = gap {
                quality.push(QualityEntry { case, site, quality: q });
            }
        }
    }
    let coverage = Coverage::compute(p, &obs.covered, &BTreeSet::new());
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: tool_version(),
        program: p.name.clone(),
        method: String::new(),
        config: Config { repeats: repeats.max(1), ..Config::default() },
        cases: obs.cases,
        coverage,
        unsat_branches: Vec::new(),
        quality,
        solver_calls: Vec::new(),
        solver_seconds: 0.0,
        iterations: count,
        results: obs.results,
        termination: Termination::Budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    #[test]
    fn random_states_are_unit_and_uniform_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2;
        let mut mean = vec![0.0; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let s = random_state(n, &mut rng);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            for (m, p) in mean.iter_mut().zip(s.basis_probabilities()) {
                *m += p / draws as f64;
            }
        }
        assert!(mean.iter().all(|m| (m - 0.25).abs() < 0.01), "{mean:?}");
        let a = random_state(3, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, random_state(3, &mut ChaCha8Rng::seed_from_u64(5)));
    }

    #[test]
    fn random_circuits() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=4 {
            assert!(random_circuit_input(n, 3, &mut rng).is_normalized());
        }
        assert_eq!(random_circuit_input(3, 0, &mut rng), StateVector::zero(3).unwrap());
        let a = random_circuit_input(2, 3, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, random_circuit_input(2, 3, &mut ChaCha8Rng::seed_from_u64(9)));
    }

    #[test]
    fn baseline_budgets() {
        let p = parse_program(include_str!("../../../../programs/teleport.qcp")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let none = run_baseline(&p, BaselineGen::Vector, 0, 10, &mut rng).unwrap();
        assert_eq!(none.coverage.ratio, 0.0);
        assert!(none.cases.is_empty());

        let det =
            parse_program("program f(q: qreg(1)) { x(q, 0); if measure(q, [0]) == [\"1\"] { return 1; } return 0; }")
                .unwrap();
        let one = run_baseline(&det, BaselineGen::Circuit { depth: 0 }, 1, 10, &mut rng).unwrap();
        assert_eq!(one.coverage.covered.len(), 1);
        assert_eq!(one.method, "circuit");
    }

    #[test]
    fn baseline_misses_a_tight_distribution_check() {
        let p = parse_program(include_str!("../../../../programs/mi_bug.qcp")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rep = run_baseline(&p, BaselineGen::Vector, 1000, 10, &mut rng).unwrap();
        assert!(rep.coverage.ratio < 1.0);
        assert!(rep.unsat_branches.is_empty());
    }
}
