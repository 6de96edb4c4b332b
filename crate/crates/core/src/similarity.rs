//! Ranking an unknown terrain against a library of known ones.
//!
//! Each known class is summarised by the mean of its (standardized) feature
//! windows. The covariance used for the Mahalanobis metric is the pooled
//! within-class covariance `S = (1/N) sum_c sum_i (x_i - mu_c)(x_i - mu_c)^T`,
//! regularized as `S + eps I` with `eps = epsilon_scale * tr(S) / d`.

use crate::classifier::{LabeledSet, Standardizer};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

pub const DEFAULT_EPSILON_SCALE: f64 = 1e-6;
/// Regularization used when the pooled covariance has zero trace.
pub const EPSILON_FLOOR: f64 = 1e-12;

/// Known-terrain summary used for distance ranking.
#[derive(Debug, Clone)]
pub struct TerrainLibrary {
    pub class_names: Vec<String>,
    /// `None` when distances are taken on raw features.
    pub standardizer: Option<Standardizer>,
    pub class_means: Vec<Vec<f64>>,
    pub pooled_covariance: Matrix,
    pub regularization_epsilon: f64,
    /// Set when the pooled covariance had zero trace and [`EPSILON_FLOOR`] was used.
    pub epsilon_floored: bool,
    factor: Cholesky,
}

impl TerrainLibrary {
    pub fn dimension(&self) -> usize {
        self.pooled_covariance.rows()
    }

    /// `S + eps I`.
    pub fn regularized_covariance(&self) -> Matrix {
        self.pooled_covariance.add_diagonal(self.regularization_epsilon)
    }

    fn project(&self, x: &[f64]) -> Vec<f64> {
        match &self.standardizer {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        }
    }
}

/// Builds the library from labeled windows.
pub fn build_library(set: &LabeledSet, epsilon_scale: f64, standardize: bool) -> Result<TerrainLibrary> {
    if set.is_empty() {
        return Err(Error::EmptyInput("no known-terrain windows".into()));
    }
    if !(epsilon_scale.is_finite() && epsilon_scale >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon scale must be non-negative, got {epsilon_scale}"
        )));
    }
    set.require_per_class(2)?;
    let d = set.dimension();
    if set.rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput("windows have differing feature counts".into()));
    }
    let standardizer = if standardize {
        Some(Standardizer::fit(&set.rows)?)
    } else {
        None
    };
    let rows: Vec<Vec<f64>> = match &standardizer {
        Some(s) => set.rows.iter().map(|r| s.apply(r)).collect(),
        None => set.rows.clone(),
    };

    let k = set.class_names.len();
    let counts = set.class_counts();
    let mut means = vec![vec![0.0; d]; k];
    for (r, &l) in rows.iter().zip(&set.labels) {
        for (m, v) in means[l].iter_mut().zip(r) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }

    let mut cov = Matrix::zeros(d, d);
    for (r, &l) in rows.iter().zip(&set.labels) {
        let diff: Vec<f64> = r.iter().zip(&means[l]).map(|(a, b)| a - b).collect();
        for i in 0..d {
            for j in 0..=i {
                cov[(i, j)] += diff[i] * diff[j];
            }
        }
    }
    let n = rows.len() as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }

    let trace = cov.trace();
    let (epsilon, floored) = if trace > 0.0 {
        let eps = epsilon_scale * trace / d as f64;
        if eps > 0.0 {
            (eps, false)
        } else {
            (EPSILON_FLOOR, true)
        }
    } else {
        (EPSILON_FLOOR, true)
    };
    let factor = Cholesky::new(&cov.add_diagonal(epsilon))?;
    Ok(TerrainLibrary {
        class_names: set.class_names.clone(),
        standardizer,
        class_means: means,
        pooled_covariance: cov,
        regularization_epsilon: epsilon,
        epsilon_floored: floored,
        factor,
    })
}

pub fn euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LayoutMismatch {
            expected: format!("{} features", x.len()),
            found: format!("{} features", y.len()),
        });
    }
    Ok(())
}

/// `sqrt((x - y)^T S^{-1} (x - y))` through a Cholesky solve of `S`.
pub fn mahalanobis_distance(x: &[f64], y: &[f64], covariance: &Matrix) -> Result<f64> {
    check_lengths(x, y)?;
    if covariance.rows() != x.len() || covariance.cols() != x.len() {
        return Err(Error::LayoutMismatch {
            expected: format!("{0}x{0} covariance", x.len()),
            found: format!("{}x{}", covariance.rows(), covariance.cols()),
        });
    }
    let factor = Cholesky::new(covariance)?;
    Ok(mahalanobis_with(&factor, x, y))
}

fn mahalanobis_with(factor: &Cholesky, x: &[f64], y: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    factor.inverse_quadratic_form(&diff).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistance {
    pub class: String,
    pub euclidean: f64,
    pub mahalanobis: f64,
}

/// Distances from an unknown terrain to every known class.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub entries: Vec<ClassDistance>,
    pub nearest_euclidean: String,
    pub nearest_mahalanobis: String,
    /// The two metrics pick different nearest classes.
    pub metric_divergence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Mahalanobis,
}

impl DistanceReport {
    /// Class names ordered from nearest to farthest; ties keep library order.
    pub fn ranking(&self, metric: Metric) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        let key = |i: usize| match metric {
            Metric::Euclidean => self.entries[i].euclidean,
            Metric::Mahalanobis => self.entries[i].mahalanobis,
        };
        idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        idx.into_iter().map(|i| self.entries[i].class.as_str()).collect()
    }
}

/// Averages the unknown windows and measures both distances to every class mean.
pub fn rank_unknown(unknown_windows: &[Vec<f64>], library: &TerrainLibrary) -> Result<DistanceReport> {
    if unknown_windows.is_empty() {
        return Err(Error::EmptyInput("no unknown-terrain windows".into()));
    }
    let d = library.dimension();
    let mut centre = vec![0.0; d];
    for w in unknown_windows {
        if w.len() != d {
            return Err(Error::LayoutMismatch {
                expected: format!("{d} features"),
                found: format!("{} features", w.len()),
            });
        }
        for (c, v) in centre.iter_mut().zip(library.project(w)) {
            *c += v;
        }
    }
    centre.iter_mut().for_each(|c| *c /= unknown_windows.len() as f64);

    let entries: Vec<ClassDistance> = library
        .class_names
        .iter()
        .zip(&library.class_means)
        .map(|(name, mean)| {
            Ok(ClassDistance {
                class: name.clone(),
                euclidean: euclidean_distance(&centre, mean)?,
                mahalanobis: mahalanobis_with(&library.factor, &centre, mean),
            })
        })
        .collect::<Result<_>>()?;
    if entries.iter().any(|e| !(e.euclidean.is_finite() && e.mahalanobis.is_finite())) {
        return Err(Error::NonFinite("distance report".into()));
    }
    let argmin = |f: fn(&ClassDistance) -> f64| {
        let mut best = 0;
        for (i, e) in entries.iter().enumerate() {
            if f(e) < f(&entries[best]) {
                best = i;
            }
        }
        entries[best].class.clone()
    };
    let nearest_euclidean = argmin(|e| e.euclidean);
    let nearest_mahalanobis = argmin(|e| e.mahalanobis);
    let metric_divergence = nearest_euclidean != nearest_mahalanobis;
    Ok(DistanceReport {
        entries,
        nearest_euclidean,
        nearest_mahalanobis,
        metric_divergence,
    })
}
