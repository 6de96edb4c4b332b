//! Multi-class terrain classifier: z-scoring, SMO-trained binary SVMs,
//! one-vs-one voting and the repeated hold-out evaluation protocol.

mod evaluate;
mod multiclass;
mod standardize;
mod svm;

pub use evaluate::{evaluate_trials, stratified_split, trial_seed, ConfusionMatrix, Evaluation};
pub use multiclass::{
    auto_gamma, train_model, KernelChoice, LabeledSet, PairModel, SvmModel, TrainParams,
    TrainReport, GAMMA_SUBSET,
};
pub use standardize::{Standardizer, STD_GUARD};
pub use svm::{kkt_residuals, train_binary_svm, BinarySvm, Kernel, SmoParams, TrainedSvm};
