use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::ir::{Gate, GateOp};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major square matrix over the gate's own qubits. Bit `j` of a local
/// index is the value of `op.qubits[j]`.
pub fn gate_matrix(op: &GateOp) -> Vec<Complex64> {
    let theta = op.angles.first().copied().unwrap_or(0.0);
    match op.gate {
        Gate::Cx => controlled(&single(Gate::X, 0.0), 1),
        Gate::Cy => controlled(&single(Gate::Y, 0.0), 1),
        Gate::Cz => controlled(&single(Gate::Z, 0.0), 1),
        Gate::Ch => controlled(&single(Gate::H, 0.0), 1),
        Gate::Crz => controlled(&single(Gate::Rz, theta), 1),
        Gate::Ccx => controlled(&single(Gate::X, 0.0), 2),
        Gate::Swap => controlled(&swap(), 0),
        Gate::Cswap => controlled(&swap(), 1),
        g => single(g, theta),
    }
}

fn single(g: Gate, theta: f64) -> Vec<Complex64> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let phase = |a: f64| Complex64::from_polar(1.0, a);
    match g {
        Gate::X => vec![ZERO, ONE, ONE, ZERO],
        Gate::Y => vec![ZERO, -I, I, ZERO],
        Gate::Z => vec![ONE, ZERO, ZERO, -ONE],
        Gate::H => vec![h, h, h, -h],
        Gate::S => vec![ONE, ZERO, ZERO, I],
        Gate::Sdg => vec![ONE, ZERO, ZERO, -I],
        Gate::T => vec![ONE, ZERO, ZERO, phase(std::f64::consts::FRAC_PI_4)],
        Gate::Tdg => vec![ONE, ZERO, ZERO, phase(-std::f64::consts::FRAC_PI_4)],
        Gate::Rx => vec![c.into(), -I * s, -I * s, c.into()],
        Gate::Ry => vec![c.into(), (-s).into(), s.into(), c.into()],
        Gate::Rz => vec![phase(-theta / 2.0), ZERO, ZERO, phase(theta / 2.0)],
        Gate::P => vec![ONE, ZERO, ZERO, phase(theta)],
        _ => unreachable!("{g} is not a single-qubit gate"),
    }
}

fn swap() -> Vec<Complex64> {
    let mut m = vec![ZERO; 16];
    for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
        m[r * 4 + c] = ONE;
    }
    m
}

/// Applies `base` to the high local bits when all `controls` low bits are 1.
fn controlled(base: &[Complex64], controls: usize) -> Vec<Complex64> {
    let base_dim = (base.len() as f64).sqrt() as usize;
    let dim = base_dim << controls;
    let ctrl_mask = (1 << controls) - 1;
    let mut m = vec![ZERO; dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            let (rc, cc) = (row & ctrl_mask, col & ctrl_mask);
            if rc != cc {
                continue;
            }
            m[row * dim + col] = if rc == ctrl_mask {
                base[(row >> controls) * base_dim + (col >> controls)]
            } else if row == col {
                ONE
            } else {
                ZERO
            };
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(g: Gate) -> GateOp {
        let qubits: Vec<usize> = (0..g.arity()).collect();
        let angles = vec![0.917; g.angle_count()];
        GateOp { gate: g, qubits, angles }
    }

    #[test]
    fn every_gate_is_unitary() {
        for g in Gate::ALL {
            let m = gate_matrix(&op(g));
            let dim = 1 << g.arity();
            assert_eq!(m.len(), dim * dim);
            let mut worst: f64 = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    let dot: Complex64 = (0..dim).map(|k| m[k * dim + i].conj() * m[k * dim + j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot - expect).norm());
                }
            }
            assert!(worst < 1e-12, "{g}: {worst}");
        }
    }

    #[test]
    fn cx_flips_target_when_control_set() {
        // local index = control + 2 * target
        let m = gate_matrix(&GateOp::new(Gate::Cx, &[0, 1]));
        assert_eq!(m[3 * 4 + 1], ONE);
        assert_eq!(m[4 + 3], ONE);
        assert_eq!(m[2 * 4 + 2], ONE);
        assert_eq!(m[0], ONE);
    }

    #[test]
    fn ccx_and_cswap_act_only_with_all_controls() {
        let ccx = gate_matrix(&GateOp::new(Gate::Ccx, &[0, 1, 2]));
        assert_eq!(ccx[7 * 8 + 3], ONE);
        assert_eq!(ccx[5 * 8 + 5], ONE);
        let cswap = gate_matrix(&GateOp::new(Gate::Cswap, &[0, 1, 2]));
        // control set, a=1, b=0 (index 0b011) swaps to a=0, b=1 (0b101)
        assert_eq!(cswap[5 * 8 + 3], ONE);
        assert_eq!(cswap[2 * 8 + 2], ONE);
    }
}
