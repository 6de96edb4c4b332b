use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns whose spread falls below this are left unscaled.
pub const STD_GUARD: f64 = 1e-12;

/// Per-feature z-scoring fitted on a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns whose population std was below [`STD_GUARD`]; stored with std 1.
    #[serde(skip)]
    pub guarded: Vec<bool>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "standardizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("rows have differing lengths".into()));
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for r in rows {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in vars.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let mut guarded = vec![false; d];
        let stds = vars
            .iter()
            .zip(guarded.iter_mut())
            .map(|(s, g)| {
                let sd = (s / n).sqrt();
                if sd < STD_GUARD {
                    *g = true;
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Self {
            means,
            stds,
            guarded,
        })
    }

    /// Rebuilds a standardizer from stored parameters.
    pub fn from_parts(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if means.len() != stds.len() {
            return Err(Error::InvalidInput(format!(
                "standardizer has {} means but {} stds",
                means.len(),
                stds.len()
            )));
        }
        if stds.iter().any(|s| !(s.is_finite() && *s > 0.0)) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidInput(
                "standardizer parameters must be finite with positive stds".into(),
            ));
        }
        let guarded = vec![false; means.len()];
        Ok(Self {
            means,
            stds,
            guarded,
        })
    }

    pub fn dimension(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| v * s + m)
            .collect()
    }
}
