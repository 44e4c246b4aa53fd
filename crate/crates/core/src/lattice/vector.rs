use serde::{Deserialize, Serialize};

use super::space::AtomicMeasureSpace;
use crate::error::{input, Result};

/// A real function on the atoms of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(Vec<f64>);

impl LatticeVector {
    pub fn new(space: &AtomicMeasureSpace, values: Vec<f64>) -> Result<Self> {
        space.check_len(&values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return input("lattice vector has a non-finite entry");
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn abs(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.abs()).collect()
    }
}

impl AsRef<[f64]> for LatticeVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
