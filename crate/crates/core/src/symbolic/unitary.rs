use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::ir::GateOp;
use crate::sim::gate_matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    n: usize,
    m: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    pub fn identity(n: usize) -> Self {
        let dim = 1 << n;
        UnitaryMatrix { n, m: DMatrix::identity(dim, dim) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[(row, col)]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        self.m.column(col).iter().copied().collect()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim()).map(|r| (0..self.dim()).map(|c| self.m[(r, c)] * v[c]).sum()).collect()
    }

    /// `U_op · self`
    pub fn then(&self, op: &GateOp) -> UnitaryMatrix {
        UnitaryMatrix { n: self.n, m: embed_gate(op, self.n).m * &self.m }
    }

    /// `max |U†U − I|`
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.m.adjoint() * &self.m;
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Full-register matrix of one gate: entry `(i, j)` is the gate entry of the
/// local indices when `i` and `j` agree on every untouched qubit.
pub fn embed_gate(op: &GateOp, n: usize) -> UnitaryMatrix {
    let g = gate_matrix(op);
    let k = op.qubits.len();
    let local_dim = 1 << k;
    let dim = 1 << n;
    let mask: usize = op.qubits.iter().map(|q| 1 << q).sum();
    let local = |x: usize| -> usize { op.qubits.iter().enumerate().map(|(j, &q)| (x >> q & 1) << j).sum() };
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if i & !mask == j & !mask {
            g[local(i) * local_dim + local(j)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    UnitaryMatrix { n, m }
}

/// `U_all = U_m ⋯ U_1` for the recorded operations.
pub fn integrate_operations(ops: &[GateOp], n: usize) -> UnitaryMatrix {
    ops.iter().fold(UnitaryMatrix::identity(n), |acc, op| acc.then(op))
}
