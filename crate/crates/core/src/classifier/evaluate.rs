//! Repeated stratified hold-out evaluation.

use rayon::prelude::*;

use super::multiclass::{train_model, LabeledSet, TrainParams};
use crate::error::{Error, Result};
use crate::rng::Xoshiro256;

/// Counts with rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len();
        Self {
            class_names,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (v, o) in row.iter_mut().zip(orow) {
                *v += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// `trace / total`, or 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Average of the per-trial accuracies.
    pub mean_accuracy: f64,
    pub trial_accuracies: Vec<f64>,
    /// Test predictions pooled over all trials.
    pub confusion: ConfusionMatrix,
    /// Binary problems, summed over trials, that hit the solver budget.
    pub unconverged_pairs: usize,
}

/// Seed of trial `i`: the master seed xor the trial index.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    master ^ trial as u64
}

/// Stratified split: per class, `round(fraction * n_c)` rows clamped to
/// `[1, n_c - 1]` go to the test side. Returns `(train, test)` index lists.
pub fn stratified_split(set: &LabeledSet, test_fraction: f64, rng: &mut Xoshiro256) -> (Vec<usize>, Vec<usize>) {
    let k = set.class_names.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in set.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut members in by_class {
        rng.shuffle(&mut members);
        let n = members.len();
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Runs `n_trials` independent stratified hold-out trials.
///
/// Each trial uses its own generator seeded by [`trial_seed`], so the result
/// does not depend on how trials are scheduled across threads.
pub fn evaluate_trials(
    set: &LabeledSet,
    n_trials: usize,
    test_fraction: f64,
    seed: u64,
    params: &TrainParams,
) -> Result<Evaluation> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    set.require_per_class(2)?;
    let trials: Vec<Result<(f64, ConfusionMatrix, usize)>> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Xoshiro256::new(trial_seed(seed, t));
            let (train_idx, test_idx) = stratified_split(set, test_fraction, &mut rng);
            let report = train_model(&set.subset(&train_idx), params, "")?;
            let mut cm = ConfusionMatrix::new(set.class_names.clone());
            for &i in &test_idx {
                cm.record(set.labels[i], report.model.predict_index(&set.rows[i])?);
            }
            Ok((cm.accuracy(), cm, report.unconverged_pairs))
        })
        .collect();
    let mut confusion = ConfusionMatrix::new(set.class_names.clone());
    let mut trial_accuracies = Vec::with_capacity(n_trials);
    let mut unconverged_pairs = 0;
    for trial in trials {
        let (acc, cm, unconverged) = trial?;
        trial_accuracies.push(acc);
        confusion.merge(&cm);
        unconverged_pairs += unconverged;
    }
    let mean_accuracy = trial_accuracies.iter().sum::<f64>() / n_trials as f64;
    Ok(Evaluation {
        mean_accuracy,
        trial_accuracies,
        confusion,
        unconverged_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot(k: usize, per_class: usize) -> LabeledSet {
        let mut rows = Vec::new();
        let mut names = Vec::new();
        for i in 0..k * per_class {
            let c = i % k;
            let mut r = vec![0.0; k];
            r[c] = 1.0;
            rows.push(r);
            names.push(format!("class{c}"));
        }
        LabeledSet::from_names(rows, &names).unwrap()
    }

    #[test]
    fn one_hot_features_are_perfect() {
        let set = one_hot(4, 10);
        let eval = evaluate_trials(&set, 5, 0.2, 1, &TrainParams::default()).unwrap();
        assert_eq!(eval.mean_accuracy, 1.0);
        for (i, row) in eval.confusion.counts.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(v, 0);
                }
            }
        }
    }

    #[test]
    fn row_sums_match_test_counts() {
        let set = one_hot(3, 11);
        let trials = 7;
        let eval = evaluate_trials(&set, trials, 0.2, 9, &TrainParams::default()).unwrap();
        // round(0.2 * 11) = 2 test rows per class and trial.
        assert!(eval.confusion.row_sums().iter().all(|&s| s == 2 * trials as u64));
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let set = one_hot(3, 10);
        let mut rng = Xoshiro256::new(3);
        let (train, test) = stratified_split(&set, 0.2, &mut rng);
        assert_eq!(train.len() + test.len(), 30);
        assert!(train.iter().all(|i| !test.contains(i)));
        for c in 0..3 {
            assert_eq!(test.iter().filter(|&&i| set.labels[i] == c).count(), 2);
        }
    }

    #[test]
    fn reproducible_from_seed() {
        let mut set = one_hot(3, 12);
        let mut rng = Xoshiro256::new(1);
        for r in set.rows.iter_mut() {
            for v in r.iter_mut() {
                *v += rng.normal() * 0.8;
            }
        }
        let a = evaluate_trials(&set, 10, 0.25, 42, &TrainParams::default()).unwrap();
        let b = evaluate_trials(&set, 10, 0.25, 42, &TrainParams::default()).unwrap();
        assert_eq!(a.confusion, b.confusion);
        assert_eq!(a.trial_accuracies, b.trial_accuracies);
    }

    #[test]
    fn argument_checks() {
        let set = one_hot(2, 5);
        let p = TrainParams::default();
        assert!(evaluate_trials(&set, 0, 0.2, 1, &p).is_err());
        assert!(evaluate_trials(&set, 1, 1.0, 1, &p).is_err());
        let tiny = LabeledSet::from_names(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            &["a".into(), "a".into(), "b".into()],
        )
        .unwrap();
        match evaluate_trials(&tiny, 1, 0.5, 1, &p) {
            Err(Error::TooFewSamples { class, count, .. }) => {
                assert_eq!(class, "b");
                assert_eq!(count, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
