use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gates::gate_matrix;
use crate::error::SimError;
use crate::ir::{outcome_string, GateOp, OutcomeMap};

pub const MAX_QUBITS: usize = 12;
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Dense statevector; qubit 0 is the least-significant bit of a basis index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl TryFrom<Vec<(f64, f64)>> for StateVector {
    type Error = String;

    fn try_from(pairs: Vec<(f64, f64)>) -> Result<Self, String> {
        StateVector::from_amplitudes(pairs.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
            .map_err(|e| e.to_string())
    }
}

impl From<StateVector> for Vec<(f64, f64)> {
    fn from(s: StateVector) -> Self {
        s.amps.iter().map(|a| (a.re, a.im)).collect()
    }
}

impl StateVector {
    /// `|0…0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self, SimError> {
        Self::zero_with_capacity(n, MAX_QUBITS)
    }

    pub fn zero_with_capacity(n: usize, max: usize) -> Result<Self, SimError> {
        if n == 0 || n > max {
            return Err(SimError::Capacity { n, max });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Wraps raw amplitudes without normalizing. The length must be a power
    /// of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(SimError::RuntimeType(format!("{len} amplitudes is not 2^n for n >= 1")));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(SimError::Capacity { n, max: MAX_QUBITS });
        }
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Scales to unit norm; `None` when the norm is below `min_norm`.
    pub fn normalized(&self, min_norm: f64) -> Option<StateVector> {
        let norm = self.norm_sqr().sqrt();
        if norm < min_norm {
            return None;
        }
        Some(StateVector { n: self.n, amps: self.amps.iter().map(|a| a / norm).collect() })
    }

    pub fn apply_gate(&self, op: &GateOp) -> Result<StateVector, SimError> {
        let mut next = self.clone();
        next.apply_in_place(op)?;
        Ok(next)
    }

    pub fn apply_in_place(&mut self, op: &GateOp) -> Result<(), SimError> {
        for &q in &op.qubits {
            if q >= self.n {
                return Err(SimError::Index { index: q, n: self.n });
            }
        }
        let m = gate_matrix(op);
        let k = op.qubits.len();
        let dim = 1usize << k;
        let mask: usize = op.qubits.iter().map(|q| 1usize << q).sum();
        // offsets[l] is the global bit pattern of local index l
        let offsets: Vec<usize> =
            (0..dim).map(|l| (0..k).filter(|j| l >> j & 1 == 1).map(|j| 1 << op.qubits[j]).sum()).collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                buf[l] = self.amps[base | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                let row = &m[r * dim..(r + 1) * dim];
                self.amps[base | off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<(), SimError> {
        match qubits.iter().find(|&&q| q >= self.n) {
            Some(&q) => Err(SimError::Index { index: q, n: self.n }),
            None => Ok(()),
        }
    }

    /// Local outcome index for a basis index: bit `j` is `qubits[j]`.
    fn local_index(index: usize, qubits: &[usize]) -> usize {
        qubits.iter().enumerate().map(|(j, &q)| (index >> q & 1) << j).sum()
    }

    /// Marginal distribution indexed by local outcome.
    pub fn marginal(&self, qubits: &[usize]) -> Result<Vec<f64>, SimError> {
        self.check_qubits(qubits)?;
        let mut probs = vec![0.0; 1 << qubits.len()];
        for (x, a) in self.amps.iter().enumerate() {
            probs[Self::local_index(x, qubits)] += a.norm_sqr();
        }
        Ok(probs)
    }

    /// Outcome → probability over `qubits`, every outcome included.
    pub fn probabilities(&self, qubits: &[usize]) -> Result<OutcomeMap, SimError> {
        Ok(self.marginal(qubits)?.into_iter().enumerate().map(|(l, p)| (outcome_string(l, qubits.len()), p)).collect())
    }

    /// Full-register distribution indexed by basis state.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Single-shot measurement with collapse.
    pub fn measure_sample<R: Rng + ?Sized>(
        &self,
        qubits: &[usize],
        rng: &mut R,
    ) -> Result<(String, StateVector), SimError> {
        let probs = self.marginal(qubits)?;
        let total: f64 = probs.iter().sum();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (l, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && *p > 0.0 {
                outcome = l;
                break;
            }
        }
        Ok((outcome_string(outcome, qubits.len()), self.project(qubits, outcome, probs[outcome])))
    }

    fn project(&self, qubits: &[usize], outcome: usize, prob: f64) -> StateVector {
        let scale = if prob > 0.0 { 1.0 / prob.sqrt() } else { 0.0 };
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(x, a)| if Self::local_index(x, qubits) == outcome { a * scale } else { Complex64::new(0.0, 0.0) })
            .collect();
        StateVector { n: self.n, amps }
    }
}
