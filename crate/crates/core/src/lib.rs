//! Concolic testing for hybrid quantum-classical programs.
//!
//! Programs written in the `.qcp` language are executed on a statevector
//! simulator while the gates along each path are recorded symbolically.
//! Branch conditions (classical comparisons, single-shot measurements and
//! distribution checks) become SMT-LIB2 constraints over the initial
//! amplitudes; flipping the last undecided branch and solving yields new
//! inputs until every reachable branch polarity has been exercised.

pub mod benchgen;
pub mod constraint;
pub mod driver;
pub mod error;
pub mod ir;
pub mod sim;
pub mod smt;
pub mod symbolic;
pub mod testcase;

pub use error::{Error, Result};
pub use ir::{parse_program, Program};
pub use sim::{execute_concrete, StateVector, Trace};
pub use testcase::{TestCase, Value};
