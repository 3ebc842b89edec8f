//! Concrete execution on a dense statevector.

mod exec;
mod gates;
mod state;

pub use exec::{distribution_gaps, eval_expr, execute_concrete, Execution, Trace, TraceStep};
pub use gates::gate_matrix;
pub use state::{StateVector, MAX_QUBITS, NORM_TOLERANCE};
