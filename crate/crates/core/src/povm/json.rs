use serde::{Deserialize, Serialize};

use super::DiscretePovm;
use crate::error::{Error, Result};
use crate::operator::{CMatrix, HermitianOperator, C64};

/// Serialized form of a [`DiscretePovm`]. Each effect is a row-major list of
/// `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PovmDocument {
    pub dim: usize,
    pub outcomes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
    pub effects: Vec<Vec<[f64; 2]>>,
}

impl PovmDocument {
    pub fn from_povm(p: &DiscretePovm) -> Self {
        let dim = p.dim();
        let effects = p
            .effects()
            .iter()
            .map(|e| {
                let m = e.matrix();
                (0..dim).flat_map(|r| (0..dim).map(move |c| [m[(r, c)].re, m[(r, c)].im])).collect()
            })
            .collect();
        Self { dim, outcomes: p.labels().to_vec(), grid: p.grid_shape().map(|(r, c)| [r, c]), effects }
    }

    pub fn to_povm(&self) -> Result<DiscretePovm> {
        if self.outcomes.len() != self.effects.len() {
            return Err(Error::LengthMismatch { expected: self.effects.len(), got: self.outcomes.len() });
        }
        let effects = self
            .effects
            .iter()
            .map(|entries| {
                if entries.len() != self.dim * self.dim {
                    return Err(Error::LengthMismatch { expected: self.dim * self.dim, got: entries.len() });
                }
                let m =
                    CMatrix::from_row_iterator(self.dim, self.dim, entries.iter().map(|[re, im]| C64::new(*re, *im)));
                HermitianOperator::new(m)
            })
            .collect::<Result<Vec<_>>>()?;
        match self.grid {
            Some([rows, cols]) => DiscretePovm::joint(rows, cols, effects),
            None => DiscretePovm::with_labels(self.outcomes.clone(), effects),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
