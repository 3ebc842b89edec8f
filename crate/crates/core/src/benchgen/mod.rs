//! Random benchmark programs and the random-input baselines they are
//! compared against.

mod baseline;

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ir::{outcome_string, parse_program, Gate, Program};

pub use baseline::{
    random_circuit_input, random_state, run_baseline, run_inputs, BaselineGen, CLASSICAL_RANGE, DEFAULT_CIRCUIT_DEPTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    S,
    M,
    L,
}

impl Scale {
    /// Gates per execution path.
    pub fn ops(self) -> usize {
        match self {
            Scale::S => 5,
            Scale::M => 10,
            Scale::L => 20,
        }
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "S" => Ok(Scale::S),
            "M" => Ok(Scale::M),
            "L" => Ok(Scale::L),
            _ => Err(format!("unknown scale `{s}` (expected S, M or L)")),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// One conditional.
    Simple,
    /// A conditional inside a conditional.
    Nested,
    /// An `if / else if / else if / else` chain.
    Multiway,
    /// Two classical parameters used together in conditions.
    Multiparam,
}

impl Structure {
    pub const ALL: [Structure; 4] = [Structure::Simple, Structure::Nested, Structure::Multiway, Structure::Multiparam];

    pub fn name(self) -> &'static str {
        match self {
            Structure::Simple => "simple",
            Structure::Nested => "nested",
            Structure::Multiway => "multiway",
            Structure::Multiparam => "multiparam",
        }
    }
}

impl FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Structure::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown structure `{s}` (expected simple, nested, multiway or multiparam)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BenchSpec {
    pub qubits: usize,
    pub scale: Scale,
    pub structure: Structure,
    pub seed: u64,
}

impl BenchSpec {
    pub fn name(&self) -> String {
        format!("b{}{}_{}_{}", self.qubits, self.scale, self.structure.name(), self.seed)
    }
}

/// Distribution-check tolerances drawn per condition.
pub const DELTAS: [f64; 2] = [0.01, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CondKind {
    Classical,
    Measure,
    Eq,
    Gt,
    Lt,
}

const COND_KINDS: [CondKind; 5] = [CondKind::Classical, CondKind::Measure, CondKind::Eq, CondKind::Gt, CondKind::Lt];

struct Gen {
    n: usize,
    rng: ChaCha8Rng,
    reference: Option<String>,
    params: Vec<&'static str>,
}

impl Gen {
    fn gates(&mut self, count: usize, indent: &str, out: &mut String) {
        let usable: Vec<Gate> = Gate::ALL.into_iter().filter(|g| g.arity() <= self.n).collect();
        for _ in 0..count {
            let g = *usable.choose(&mut self.rng).expect("single-qubit gates always usable");
            let qubits = rand::seq::index::sample(&mut self.rng, self.n, g.arity()).into_vec();
            let mut operands: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
            for _ in 0..g.angle_count() {
                operands.push(format!("{:.4}", self.rng.random_range(0.0..std::f64::consts::TAU)));
            }
            let _ = writeln!(out, "{indent}{}(q, {});", g.name(), operands.join(", "));
        }
    }

    fn outcome(&mut self) -> String {
        outcome_string(self.rng.random_range(0..1usize << self.n), self.n)
    }

    /// Random distribution over every outcome, 4 decimals, exact sum 1.
    fn distribution(&mut self) -> String {
        let dim = 1usize << self.n;
        let weights: Vec<f64> = (0..dim).map(|_| self.rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let mut ticks: Vec<u32> = weights.iter().map(|w| (w / total * 10_000.0).floor() as u32).collect();
        let used: u32 = ticks.iter().sum();
        ticks[dim - 1] += 10_000 - used;
        let items: Vec<String> = ticks
            .iter()
            .enumerate()
            .map(|(x, t)| format!("\"{}\": {}", outcome_string(x, self.n), *t as f64 / 10_000.0))
            .collect();
        format!("{{{}}}", items.join(", "))
    }

    fn classical_cond(&mut self) -> String {
        let lhs = if self.params.len() > 1 {
            format!("{} + {}", self.params[0], self.params[1])
        } else {
            self.params[0].to_string()
        };
        let cmp = *["==", "!=", "<", "<=", ">", ">="].choose(&mut self.rng).unwrap();
        let rhs = self.rng.random_range(1..10);
        format!("{lhs} {cmp} {rhs}")
    }

    fn cond(&mut self, kind: CondKind) -> String {
        let delta = *DELTAS.choose(&mut self.rng).unwrap();
        match kind {
            CondKind::Classical => self.classical_cond(),
            CondKind::Measure => {
                let q = self.rng.random_range(0..self.n);
                let bit = self.rng.random_range(0..2);
                format!("measure(q, [{q}]) == [\"{bit}\"]")
            }
            CondKind::Eq => {
                let d = self.distribution();
                if self.reference.is_none() {
                    self.reference = Some(d.clone());
                }
                format!("check_state_eq(q, {d}, {delta})")
            }
            CondKind::Gt | CondKind::Lt => {
                let name = if kind == CondKind::Gt { "check_state_gt" } else { "check_state_lt" };
                let o = self.outcome();
                let p = (self.rng.random_range(0.1..0.9f64) * 100.0).round() / 100.0;
                format!("{name}(q, {{\"{o}\": {p}}}, {delta})")
            }
        }
    }

    fn any_cond(&mut self) -> String {
        let kind = *COND_KINDS.choose(&mut self.rng).unwrap();
        self.cond(kind)
    }

    fn quantum_cond(&mut self) -> String {
        let kind = *COND_KINDS[1..].choose(&mut self.rng).unwrap();
        self.cond(kind)
    }
}

/// Program text for `spec`; identical specs give identical text.
pub fn generate_source(spec: &BenchSpec) -> String {
    let n = spec.qubits.clamp(1, 4);
    let total = spec.scale.ops();
    let mut g = Gen {
        n,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        reference: None,
        params: if spec.structure == Structure::Multiparam { vec!["a", "b"] } else { vec!["a"] },
    };
    let mut body = String::new();
    let b = &mut body;
    match spec.structure {
        Structure::Simple => {
            let prefix = total / 2;
            g.gates(prefix, "    ", b);
            let c = g.any_cond();
            let _ = writeln!(b, "    if {c} {{");
            g.gates(total - prefix, "        ", b);
            let _ = writeln!(b, "        return 1;\n    }} else {{");
            g.gates(total - prefix, "        ", b);
            let _ = writeln!(b, "        return 0;\n    }}");
        }
        Structure::Nested => {
            let (prefix, outer) = (total / 3, total / 3);
            let inner = total - prefix - outer;
            g.gates(prefix, "    ", b);
            let c1 = g.any_cond();
            let _ = writeln!(b, "    if {c1} {{");
            g.gates(outer, "        ", b);
            let c2 = g.quantum_cond();
            let _ = writeln!(b, "        if {c2} {{");
            g.gates(inner, "            ", b);
            let _ = writeln!(b, "            return 2;\n        }} else {{");
            g.gates(inner, "            ", b);
            let _ = writeln!(b, "            return 1;\n        }}\n    }} else {{");
            g.gates(outer + inner, "        ", b);
            let _ = writeln!(b, "        return 0;\n    }}");
        }
        Structure::Multiway => {
            let prefix = total / 2;
            g.gates(prefix, "    ", b);
            for arm in 0..3 {
                let c = g.any_cond();
                let head = if arm == 0 { "    if" } else { " else if" };
                let _ = writeln!(b, "{head} {c} {{");
                g.gates(total - prefix, "        ", b);
                let _ = write!(b, "        return {};\n    }}", arm + 1);
            }
            let _ = writeln!(b, " else {{");
            g.gates(total - prefix, "        ", b);
            let _ = writeln!(b, "        return 0;\n    }}");
        }
        Structure::Multiparam => {
            let (prefix, first) = (total / 3, total / 3);
            let second = total - prefix - first;
            g.gates(prefix, "    ", b);
            let c1 = g.classical_cond();
            let _ = writeln!(b, "    if {c1} {{");
            g.gates(first, "        ", b);
            let _ = writeln!(b, "    }} else {{");
            g.gates(first, "        ", b);
            let _ = writeln!(b, "    }}");
            let c2 = g.quantum_cond();
            let _ = writeln!(b, "    if {c2} {{");
            g.gates(second, "        ", b);
            let _ = writeln!(b, "        return 1;\n    }} else {{");
            g.gates(second, "        ", b);
            let _ = writeln!(b, "        return 0;\n    }}");
        }
    }
    let reference = g.reference.clone().unwrap_or_else(|| g.distribution());
    let params: Vec<String> = g.params.iter().map(|p| format!("{p}: int")).collect();
    format!("@reference({reference})\nprogram {}({}, q: qreg({n})) {{\n{body}}}\n", spec.name(), params.join(", "))
}

pub fn generate_benchmark(spec: &BenchSpec) -> Program {
    let src = generate_source(spec);
    parse_program(&src).unwrap_or_else(|e| panic!("generated program failed to parse: {e}\n{src}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub spec: BenchSpec,
    pub branch_sites: usize,
}

/// Suite index written next to the generated programs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub deltas: Vec<f64>,
    /// How conditions are drawn, for readers of the suite.
    pub condition_draws: String,
    pub programs: Vec<ManifestEntry>,
}

/// `count` programs with seeds `seed, seed + 1, …`; structures cycle when
/// `structure` is `None`. Returns `(file name, source)` pairs and the manifest.
pub fn generate_suite(
    qubits: usize,
    scale: Scale,
    structure: Option<Structure>,
    count: usize,
    seed: u64,
) -> (Vec<(String, String)>, Manifest) {
    let mut files = Vec::with_capacity(count);
    let mut programs = Vec::with_capacity(count);
    for i in 0..count {
        let spec = BenchSpec {
            qubits,
            scale,
            structure: structure.unwrap_or(Structure::ALL[i % Structure::ALL.len()]),
            seed: seed.wrapping_add(i as u64),
        };
        let src = generate_source(&spec);
        let p = generate_benchmark(&spec);
        let file = format!("{}.qcp", spec.name());
        programs.push(ManifestEntry { file: file.clone(), spec, branch_sites: p.branch_sites.len() });
        files.push((file, src));
    }
    let manifest = Manifest {
        schema_version: 1,
        deltas: DELTAS.to_vec(),
        condition_draws:
            "kind uniform over classical/measure/eq/gt/lt; classical rhs uniform in [1, 9]; \
                          measured qubit and outcome uniform; eq distributions uniform weights normalized to 4 \
                          decimals; gt/lt bound uniform in [0.1, 0.9] on one uniform outcome; delta uniform over deltas"
                .into(),
        programs,
    };
    (files, manifest)
}
