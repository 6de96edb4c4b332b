use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::svm::{train_binary_svm, BinarySvm, Kernel, SmoParams};
use crate::error::{Error, Result};

/// Rows used when estimating the automatic RBF width.
pub const GAMMA_SUBSET: usize = 256;

/// How to pick the kernel for a multi-class model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelChoice {
    Linear,
    /// RBF; `None` selects `gamma = 1 / (d * median squared distance)`.
    Rbf(Option<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub kernel: KernelChoice,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::Rbf(None),
            c: 10.0,
            tol: 1e-3,
            max_passes: 50,
        }
    }
}

/// Feature rows with integer class labels indexing `class_names`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledSet {
    /// Builds a set from string labels; classes are numbered in order of first appearance.
    pub fn from_names(rows: Vec<Vec<f64>>, names: &[String]) -> Result<Self> {
        if rows.len() != names.len() {
            return Err(Error::InvalidInput(format!(
                "{} rows but {} labels",
                rows.len(),
                names.len()
            )));
        }
        let mut class_names: Vec<String> = Vec::new();
        let labels = names
            .iter()
            .map(|n| match class_names.iter().position(|c| c == n) {
                Some(i) => i,
                None => {
                    class_names.push(n.clone());
                    class_names.len() - 1
                }
            })
            .collect();
        Ok(Self {
            rows,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Fails naming the first class with fewer than `min` rows.
    pub fn require_per_class(&self, min: usize) -> Result<()> {
        for (name, count) in self.class_names.iter().zip(self.class_counts()) {
            if count < min {
                return Err(Error::TooFewSamples {
                    class: name.clone(),
                    count,
                    required: min,
                });
            }
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// One pairwise classifier: positive side is `class_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    pub class_a: usize,
    pub class_b: usize,
    pub svm: BinarySvm,
}

/// One-vs-one multi-class SVM over standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub standardizer: Standardizer,
    pub class_names: Vec<String>,
    pub pairwise: Vec<PairModel>,
    pub feature_layout_id: String,
}

/// Outcome of training, with solver diagnostics.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: SvmModel,
    /// Pairs whose solver hit the iteration budget.
    pub unconverged_pairs: usize,
}

/// `1 / (d * median pairwise squared distance)` over an evenly spaced subset
/// of at most [`GAMMA_SUBSET`] rows.
pub fn auto_gamma(rows: &[Vec<f64>]) -> f64 {
    let d = rows.first().map_or(1, Vec::len).max(1) as f64;
    let n = rows.len();
    let take = n.min(GAMMA_SUBSET);
    let picked: Vec<&Vec<f64>> = (0..take).map(|k| &rows[k * n / take.max(1)]).collect();
    let mut dists = Vec::with_capacity(take * take.saturating_sub(1) / 2);
    for i in 0..picked.len() {
        for j in i + 1..picked.len() {
            dists.push(
                picked[i]
                    .iter()
                    .zip(picked[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>(),
            );
        }
    }
    if dists.is_empty() {
        return 1.0 / d;
    }
    dists.sort_by(f64::total_cmp);
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 0 {
        (dists[mid - 1] + dists[mid]) / 2.0
    } else {
        dists[mid]
    };
    if median > 0.0 {
        1.0 / (d * median)
    } else {
        1.0 / d
    }
}

/// Trains the one-vs-one model.
pub fn train_model(set: &LabeledSet, params: &TrainParams, feature_layout_id: &str) -> Result<TrainReport> {
    let k = set.class_names.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "classification needs at least 2 classes, found {k}"
        )));
    }
    set.require_per_class(1)?;
    let standardizer = Standardizer::fit(&set.rows)?;
    let z: Vec<Vec<f64>> = set.rows.iter().map(|r| standardizer.apply(r)).collect();
    let kernel = match params.kernel {
        KernelChoice::Linear => Kernel::Linear,
        KernelChoice::Rbf(Some(gamma)) => Kernel::Rbf { gamma },
        KernelChoice::Rbf(None) => Kernel::Rbf {
            gamma: auto_gamma(&z),
        },
    };
    let smo = SmoParams {
        c: params.c,
        kernel,
        tol: params.tol,
        max_passes: params.max_passes,
    };
    let mut pairwise = Vec::with_capacity(k * (k - 1) / 2);
    let mut unconverged_pairs = 0;
    for a in 0..k {
        for b in a + 1..k {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (row, &label) in z.iter().zip(&set.labels) {
                if label == a || label == b {
                    xs.push(row.clone());
                    ys.push(if label == a { 1.0 } else { -1.0 });
                }
            }
            let trained = train_binary_svm(&xs, &ys, &smo)?;
            if !trained.converged {
                unconverged_pairs += 1;
            }
            pairwise.push(PairModel {
                class_a: a,
                class_b: b,
                svm: trained.svm,
            });
        }
    }
    Ok(TrainReport {
        model: SvmModel {
            standardizer,
            class_names: set.class_names.clone(),
            pairwise,
            feature_layout_id: feature_layout_id.to_string(),
        },
        unconverged_pairs,
    })
}

impl SvmModel {
    pub fn dimension(&self) -> usize {
        self.standardizer.dimension()
    }

    /// Index of the winning class for a raw (unstandardized) feature vector.
    ///
    /// Majority vote over all pairs; ties go to the class with the largest
    /// summed `|decision|` over its won pairs, then to the lowest index.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dimension() {
            return Err(Error::LayoutMismatch {
                expected: format!("{} features", self.dimension()),
                found: format!("{} features", x.len()),
            });
        }
        let z = self.standardizer.apply(x);
        let k = self.class_names.len();
        let mut votes = vec![0usize; k];
        let mut strength = vec![0.0f64; k];
        for pair in &self.pairwise {
            let d = pair.svm.decision(&z);
            let winner = if d >= 0.0 { pair.class_a } else { pair.class_b };
            votes[winner] += 1;
            strength[winner] += d.abs();
        }
        let mut best = 0;
        for c in 1..k {
            if votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best]) {
                best = c;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        Ok(&self.class_names[self.predict_index(x)?])
    }
}
