//! Soft-margin binary SVM trained by sequential minimal optimisation.
//!
//! The dual is `min 1/2 a^T Q a - e^T a` subject to `0 <= a_i <= C` and
//! `sum a_i y_i = 0`, with `Q_ij = y_i y_j K(x_i, x_j)`. Each step picks the
//! maximal violating index `i` and the partner `j` that maximises the
//! second-order decrease of the objective, then solves the two-variable
//! subproblem in closed form. Training stops once the violation gap
//! `max_{I_up} -y G - min_{I_low} -y G` drops below `tol`; at that point every
//! KKT condition holds within `tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curvature floor for pairs with a non-positive kernel distance.
const TAU: f64 = 1e-12;
/// Smallest training-set size used when sizing the iteration budget, so tiny
/// rank-deficient problems still get room to converge.
const MIN_PASS_LEN: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Linear => "linear",
            Kernel::Rbf { .. } => "rbf",
        }
    }
}

/// Solver settings for one binary problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub kernel: Kernel,
    /// Allowed KKT violation at termination.
    pub tol: f64,
    /// Iteration budget, in units of `max(n, 1000)` pair updates.
    pub max_passes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            kernel: Kernel::Rbf { gamma: 1.0 },
            tol: 1e-3,
            max_passes: 50,
        }
    }
}

/// A trained two-class decision function `f(x) = sum_i coef_i K(sv_i, x) + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub c: f64,
}

impl BinarySvm {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// `+1` or `-1`; a zero decision value goes to `+1`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        if self.decision(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Result of [`train_binary_svm`], keeping the full multiplier vector.
#[derive(Debug, Clone)]
pub struct TrainedSvm {
    pub svm: BinarySvm,
    /// One multiplier per training point.
    pub alphas: Vec<f64>,
    pub iterations: usize,
    /// `false` when the iteration budget ran out first; the model is the last iterate.
    pub converged: bool,
    /// Final violation gap.
    pub gap: f64,
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha > 0.0) || (y < 0.0 && alpha < c)
}

/// Trains a soft-margin SVM on `x` with labels `y` in `{-1, +1}`.
pub fn train_binary_svm(x: &[Vec<f64>], y: &[f64], params: &SmoParams) -> Result<TrainedSvm> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::InvalidInput(format!(
            "{n} rows but {} labels",
            y.len()
        )));
    }
    if let Some(v) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(Error::InvalidInput(format!("label {v} is not +1 or -1")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::InvalidInput(
            "binary SVM needs both classes present".into(),
        ));
    }
    if !(params.c.is_finite() && params.c > 0.0) {
        return Err(Error::InvalidInput(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tol must be positive, got {}", params.tol)));
    }
    if let Kernel::Rbf { gamma } = params.kernel {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
        }
    }
    let c = params.c;

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = params.kernel.eval(&x[i], &x[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective, Q alpha - e.
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_passes.max(1) * n.max(MIN_PASS_LEN);
    let mut iterations = 0;
    let mut converged = false;
    let mut gap;

    loop {
        let mut m_up = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t], c) && v > m_up {
                m_up = v;
                i_sel = t;
            }
            if in_low(alpha[t], y[t], c) && v < m_low {
                m_low = v;
            }
        }
        gap = m_up - m_low;
        if gap < params.tol || i_sel == usize::MAX {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        let i = i_sel;

        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t], c) {
                continue;
            }
            let b = m_up + y[t] * grad[t];
            if b <= 0.0 {
                continue;
            }
            let mut a = k[i * n + i] + k[t * n + t] - 2.0 * k[i * n + t];
            if a <= 0.0 {
                a = TAU;
            }
            let score = -b * b / a;
            if score < best {
                best = score;
                j_sel = t;
            }
        }
        if j_sel == usize::MAX {
            converged = true;
            break;
        }
        let j = j_sel;

        // Move alpha_i by +y_i t and alpha_j by -y_j t, keeping sum alpha y fixed.
        let mut a = k[i * n + i] + k[j * n + j] - 2.0 * k[i * n + j];
        if a <= 0.0 {
            a = TAU;
        }
        let vi = -y[i] * grad[i];
        let vj = -y[j] * grad[j];
        let room_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let room_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let step = ((vi - vj) / a).min(room_i).min(room_j);

        let old_i = alpha[i];
        let old_j = alpha[j];
        alpha[i] = if step == room_i {
            if y[i] > 0.0 { c } else { 0.0 }
        } else {
            old_i + y[i] * step
        };
        alpha[j] = if step == room_j {
            if y[j] > 0.0 { 0.0 } else { c }
        } else {
            old_j - y[j] * step
        };
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k[t * n + i] * di + y[j] * k[t * n + j] * dj);
        }
        iterations += 1;
    }

    // Bias: mean over free multipliers, or the middle of the feasible interval.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += v;
            free_count += 1;
        } else if in_up(alpha[t], y[t], c) {
            lb = lb.max(v);
        } else {
            ub = ub.min(v);
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else if lb.is_finite() && ub.is_finite() {
        (lb + ub) / 2.0
    } else if lb.is_finite() {
        lb
    } else {
        ub
    };

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            coefficients.push(alpha[t] * y[t]);
        }
    }
    Ok(TrainedSvm {
        svm: BinarySvm {
            kernel: params.kernel,
            support_vectors,
            coefficients,
            bias,
            c,
        },
        alphas: alpha,
        iterations,
        converged,
        gap,
    })
}

/// Largest KKT violation of a trained model on its training set, measured on
/// the margin `y f(x)`; together with the dual equality residual `|sum a y|`.
pub fn kkt_residuals(trained: &TrainedSvm, x: &[Vec<f64>], y: &[f64]) -> (f64, f64) {
    let c = trained.svm.c;
    let mut worst = 0.0f64;
    for ((xi, &yi), &a) in x.iter().zip(y).zip(&trained.alphas) {
        let margin = yi * trained.svm.decision(xi);
        let violation = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    let equality = trained
        .alphas
        .iter()
        .zip(y)
        .map(|(a, y)| a * y)
        .sum::<f64>()
        .abs();
    (worst, equality)
}
