use serde::Serialize;

use super::OpticsError;

/// Static structure function `S(q)` of an isotropic medium. `S ≡ 1` is the
/// uncorrelated limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureFunction {
    Constant { value: f64 },
    /// Linear interpolation on a strictly increasing grid, clamped at the ends.
    Tabulated { q: Vec<f64>, values: Vec<f64> },
}

impl Default for StructureFunction {
    fn default() -> Self {
        StructureFunction::Constant { value: 1.0 }
    }
}

impl StructureFunction {
    pub fn constant(value: f64) -> Self {
        StructureFunction::Constant { value }
    }

    pub fn tabulated(q: Vec<f64>, values: Vec<f64>) -> Result<Self, OpticsError> {
        if q.len() != values.len() {
            return Err(OpticsError::Table(format!(
                "{} q values but {} S values",
                q.len(),
                values.len()
            )));
        }
        if q.is_empty() {
            return Err(OpticsError::Table("table is empty".into()));
        }
        if q.iter().chain(values.iter()).any(|x| !x.is_finite()) {
            return Err(OpticsError::Table("non-finite entry".into()));
        }
        if let Some(i) = q.windows(2).position(|w| w[1] <= w[0]) {
            return Err(OpticsError::Table(format!(
                "q grid not strictly increasing at row {}",
                i + 2
            )));
        }
        Ok(StructureFunction::Tabulated { q, values })
    }

    /// Interpolated value; negative results are reported, not clamped.
    pub fn eval(&self, q: f64) -> Result<f64, OpticsError> {
        let s = match self {
            StructureFunction::Constant { value } => *value,
            StructureFunction::Tabulated { q: grid, values } => {
                let n = grid.len();
                if q <= grid[0] {
                    values[0]
                } else if q >= grid[n - 1] {
                    values[n - 1]
                } else {
                    let hi = grid.partition_point(|&x| x <= q);
                    let lo = hi - 1;
                    let t = (q - grid[lo]) / (grid[hi] - grid[lo]);
                    values[lo] + t * (values[hi] - values[lo])
                }
            }
        };
        if s < 0.0 {
            return Err(OpticsError::NegativeStructure { q, value: s });
        }
        Ok(s)
    }

    /// Same function of the rescaled argument: `S'(q) = S(α q)`.
    pub fn with_scaled_argument(&self, alpha: f64) -> Self {
        match self {
            StructureFunction::Constant { .. } => self.clone(),
            StructureFunction::Tabulated { q, values } => StructureFunction::Tabulated {
                q: q.iter().map(|x| x / alpha).collect(),
                values: values.clone(),
            },
        }
    }
}
