//! Cross-channel covariance and its eigenvalues.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{TimeSeries, Window, CHANNELS};

/// Symmetric 3x3 covariance of the three sensor channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance3(pub [[f64; 3]; 3]);

impl Covariance3 {
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.0)
    }

    fn scale(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Eigenvalues sorted in descending order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSignature(pub [f64; 3]);

impl EigenSignature {
    pub fn largest(&self) -> f64 {
        self.0[0]
    }
}

/// Population covariance `(1/n) sum (x_i - mean_i)(x_j - mean_j)` over a window.
pub fn covariance3(series: &TimeSeries, window: Window) -> Result<Covariance3> {
    window.validate(series.len())?;
    let slices: Vec<&[f64]> = (0..CHANNELS).map(|c| series.window_slice(c, window)).collect();
    let n = window.len as f64;
    let means: Vec<f64> = slices.iter().map(|s| s.iter().sum::<f64>() / n).collect();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let s: f64 = slices[i]
                .iter()
                .zip(slices[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum();
            m[i][j] = s / n;
            m[j][i] = m[i][j];
        }
    }
    Ok(Covariance3(m))
}

const JACOBI_SWITCH: f64 = 1e-6;
const JACOBI_MAX_SWEEPS: usize = 32;

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form.
///
/// With `q = tr(A)/3` and `p = sqrt(tr((A - qI)^2) / 6)`, the matrix
/// `B = (A - qI)/p` has eigenvalues `2 cos(phi + 2 pi k / 3)` where
/// `cos(3 phi) = det(B) / 2`. The middle eigenvalue is recovered from the
/// trace so the three always sum to `tr(A)` up to rounding.
///
/// Near a repeated eigenvalue (`|cos(3 phi)|` within [`JACOBI_SWITCH`] of 1)
/// `acos` loses half the digits, so those matrices go through cyclic Jacobi
/// rotations instead.
pub fn eigenvalues_sym3(m: &Covariance3) -> Result<EigenSignature> {
    let a = &m.0;
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance matrix".into()));
    }
    let tol = 1e-12 * m.scale().max(1.0);
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if (a[i][j] - a[j][i]).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric: entry ({i},{j}) = {} but ({j},{i}) = {}",
                a[i][j], a[j][i]
            )));
        }
    }
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let mut eig = if p1 == 0.0 {
        [a[0][0], a[1][1], a[2][2]]
    } else {
        let q = m.trace() / 3.0;
        let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = *a;
        for (i, row) in b.iter_mut().enumerate() {
            for v in row.iter_mut() {
                *v /= p;
            }
            row[i] -= q / p;
        }
        let r = (det3(&b) / 2.0).clamp(-1.0, 1.0);
        if 1.0 - r.abs() < JACOBI_SWITCH {
            let mut e = jacobi_sym3(*a);
            e.sort_by(|x, y| y.total_cmp(x));
            return Ok(EigenSignature(e));
        }
        let phi = r.acos() / 3.0;
        let largest = q + 2.0 * p * phi.cos();
        let smallest = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
        [largest, 3.0 * q - largest - smallest, smallest]
    };
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(EigenSignature(eig))
}

fn jacobi_sym3(mut a: [[f64; 3]; 3]) -> [f64; 3] {
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        let diag = a[0][0].powi(2) + a[1][1].powi(2) + a[2][2].powi(2);
        if off <= f64::EPSILON.powi(2) * diag || off == 0.0 {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == 0.0 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let r = 3 - p - q;
            let (arp, arq) = (a[r][p], a[r][q]);
            a[p][p] -= t * a[p][q];
            a[q][q] += t * a[p][q];
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];
        }
    }
    [a[0][0], a[1][1], a[2][2]]
}

/// Covariance eigen-signature of one window of raw (mean-removed) channels.
pub fn eigen_signature(series: &TimeSeries, window: Window) -> Result<EigenSignature> {
    eigenvalues_sym3(&covariance3(series, window)?)
}
