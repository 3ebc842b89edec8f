//! Test inputs and their JSON interchange format.
//!
//! ```json
//! { "classical": { "alice": 1 }, "amplitudes": [[0.6, 0.0], [0.0, 0.8]] }
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::ir::{ParamKind, Program};
use crate::sim::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Int(i) => i as f64,
            Value::Real(x) => x,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub classical: BTreeMap<String, Value>,
    #[serde(rename = "amplitudes")]
    pub initial_state: StateVector,
}

impl TestCase {
    /// All classical parameters zero and `|0…0⟩`.
    pub fn initial(p: &Program) -> Result<TestCase, SimError> {
        let classical = p
            .classical_params()
            .map(|param| {
                let v = match param.kind {
                    ParamKind::Real => Value::Real(0.0),
                    _ => Value::Int(0),
                };
                (param.name.clone(), v)
            })
            .collect();
        Ok(TestCase { classical, initial_state: StateVector::zero(p.n())? })
    }

    pub fn load(path: &Path) -> Result<Vec<TestCase>> {
        let text = std::fs::read_to_string(path)?;
        let trimmed = text.trim_start();
        if trimmed.starts_with('[') {
            Ok(serde_json::from_str(trimmed)?)
        } else {
            Ok(vec![serde_json::from_str(trimmed)?])
        }
    }
}
