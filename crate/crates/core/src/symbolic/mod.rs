//! Symbolic view of a path: recorded gate lists, their integrated unitary,
//! and final amplitudes as linear expressions over the initial state.

mod unitary;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::ir::{GateOp, Program};
use crate::sim::StateVector;

pub use unitary::{embed_gate, integrate_operations, UnitaryMatrix};

/// Coefficients below this magnitude are floating-point residue of exact zeros.
const COEFF_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassicalSymbol {
    pub base: String,
    pub version: u32,
}

impl fmt::Display for ClassicalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.base, self.version)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicQuantumObject {
    pub name: String,
    pub n: usize,
    pub operation_list: Vec<GateOp>,
}

impl SymbolicQuantumObject {
    pub fn new(name: impl Into<String>, n: usize) -> Self {
        SymbolicQuantumObject { name: name.into(), n, operation_list: Vec::new() }
    }

    pub fn record_op(&self, op: &GateOp) -> Result<SymbolicQuantumObject, SimError> {
        if let Some(&q) = op.qubits.iter().find(|&&q| q >= self.n) {
            return Err(SimError::Index { index: q, n: self.n });
        }
        let mut next = self.clone();
        next.operation_list.push(op.clone());
        Ok(next)
    }

    pub fn clear(&mut self) {
        self.operation_list.clear();
    }

    /// `['x(1)', 'z(1)', 'h(1)']`
    pub fn operations_text(&self) -> String {
        let items: Vec<String> = self.operation_list.iter().map(|o| format!("'{o}'")).collect();
        format!("[{}]", items.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicEnv {
    pub classical: Vec<ClassicalSymbol>,
    pub quantum: SymbolicQuantumObject,
}

impl SymbolicEnv {
    pub fn symbol(&self, name: &str) -> Option<&ClassicalSymbol> {
        self.classical.iter().find(|s| s.base == name)
    }
}

/// One version-0 symbol per classical parameter and an empty quantum object
/// named after the register (`qc` → `sqc`).
pub fn symbolize(p: &Program) -> SymbolicEnv {
    SymbolicEnv {
        classical: p.classical_params().map(|param| ClassicalSymbol { base: param.name.clone(), version: 0 }).collect(),
        quantum: SymbolicQuantumObject::new(format!("s{}", p.qreg_name()), p.n()),
    }
}

/// Final amplitudes as real linear forms over the initial variables.
///
/// Variable `j < 2^n` is `a⁰_j` (real part of initial amplitude `j`) and
/// `2^n + j` is `b⁰_j` (imaginary part). For `U = A + iB`, the real row of
/// amplitude `x` is `[A_x | −B_x]` and the imaginary row is `[B_x | A_x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeExprs {
    pub n: usize,
    pub real: Vec<Vec<f64>>,
    pub imag: Vec<Vec<f64>>,
}

impl AmplitudeExprs {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn identity(n: usize) -> Self {
        Self::from_unitary(&UnitaryMatrix::identity(n))
    }

    pub fn from_unitary(u: &UnitaryMatrix) -> Self {
        let dim = u.dim();
        let chop = |c: f64| if c.abs() < COEFF_EPS { 0.0 } else { c };
        let mut real = Vec::with_capacity(dim);
        let mut imag = Vec::with_capacity(dim);
        for x in 0..dim {
            let mut re_row = vec![0.0; 2 * dim];
            let mut im_row = vec![0.0; 2 * dim];
            for j in 0..dim {
                let e = u.entry(x, j);
                re_row[j] = chop(e.re);
                re_row[dim + j] = chop(-e.im);
                im_row[j] = chop(e.im);
                im_row[dim + j] = chop(e.re);
            }
            real.push(re_row);
            imag.push(im_row);
        }
        AmplitudeExprs { n: u.n(), real, imag }
    }

    /// Substitutes an initial state.
    pub fn evaluate(&self, initial: &StateVector) -> Vec<Complex64> {
        let vars = Self::variables_of(initial);
        (0..self.dim()).map(|x| Complex64::new(dot(&self.real[x], &vars), dot(&self.imag[x], &vars))).collect()
    }

    /// `|amplitude x|²` for an initial state.
    pub fn probability(&self, x: usize, initial: &StateVector) -> f64 {
        let vars = Self::variables_of(initial);
        let (r, i) = (dot(&self.real[x], &vars), dot(&self.imag[x], &vars));
        r * r + i * i
    }

    /// `(a⁰_0 … a⁰_{d−1}, b⁰_0 … b⁰_{d−1})`
    pub fn variables_of(s: &StateVector) -> Vec<f64> {
        let amps = s.amplitudes();
        amps.iter().map(|a| a.re).chain(amps.iter().map(|a| a.im)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Amplitude expressions after applying `ops` to the symbolic initial state.
pub fn amplitude_exprs_at(ops: &[GateOp], n: usize) -> AmplitudeExprs {
    AmplitudeExprs::from_unitary(&integrate_operations(ops, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, Gate};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn symbolizes_teleport() {
        let p = parse_program(include_str!("../../../../programs/teleport.qcp")).unwrap();
        let env = symbolize(&p);
        assert_eq!(env.classical.len(), 1);
        assert_eq!(env.classical[0].to_string(), "alice_0");
        assert_eq!(env.quantum.name, "sqc");
        assert_eq!(env.quantum.n, 2);
        assert!(env.quantum.operation_list.is_empty());
    }

    #[test]
    fn symbolize_counts_params() {
        let only_q = parse_program("program f(q: qreg(1)) { }").unwrap();
        assert!(symbolize(&only_q).classical.is_empty());
        let two = parse_program("program f(a: int, b: real, q: qreg(1)) { }").unwrap();
        let env = symbolize(&two);
        assert_eq!(env.classical.len(), 2);
        assert_ne!(env.classical[0], env.classical[1]);
        assert!(env.classical.iter().all(|s| s.version == 0));
    }

    #[test]
    fn records_in_order() {
        let obj = SymbolicQuantumObject::new("sqc", 2);
        assert_eq!(obj.operations_text(), "[]");
        let obj = [Gate::X, Gate::Z, Gate::H].iter().try_fold(obj, |o, g| o.record_op(&GateOp::new(*g, &[1]))).unwrap();
        assert_eq!(obj.operations_text(), "['x(1)', 'z(1)', 'h(1)']");
        assert!(obj.record_op(&GateOp::new(Gate::X, &[2])).is_err());

        let mut many = SymbolicQuantumObject::new("s", 3);
        for i in 0..20 {
            many = many.record_op(&GateOp::with_angles(Gate::Rz, &[i % 3], &[i as f64])).unwrap();
        }
        assert_eq!(many.operation_list.len(), 20);
        assert!(many.operation_list.iter().enumerate().all(|(i, o)| o.angles[0] == i as f64));
    }

    #[test]
    fn identity_prefix_is_the_initial_variables() {
        let e = amplitude_exprs_at(&[], 2);
        for x in 0..4 {
            for j in 0..8 {
                assert_eq!(e.real[x][j], if j == x { 1.0 } else { 0.0 });
                assert_eq!(e.imag[x][j], if j == 4 + x { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn x_swaps_rows() {
        let e = amplitude_exprs_at(&[GateOp::new(Gate::X, &[0])], 1);
        // variables: a0, a1, b0, b1
        assert_eq!(e.real[0], vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(e.imag[0], vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(e.real[1], vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(e.imag[1], vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn h_rows() {
        let e = amplitude_exprs_at(&[GateOp::new(Gate::H, &[0])], 1);
        let h = FRAC_1_SQRT_2;
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
        assert!(close(&e.real[0], &[h, h, 0.0, 0.0]));
        assert!(close(&e.real[1], &[h, -h, 0.0, 0.0]));
        assert!(close(&e.imag[0], &[0.0, 0.0, h, h]));
    }

    #[test]
    fn imaginary_gates_split_correctly() {
        // S|1> = i|1>: real part of amplitude 1 is -b1, imaginary part is a1.
        let e = amplitude_exprs_at(&[GateOp::new(Gate::S, &[0])], 1);
        assert_eq!(e.real[1], vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(e.imag[1], vec![0.0, 1.0, 0.0, 0.0]);
    }
}
