//! Web search model: weak labeling, hashed features, the log-linear query
//! classifier, and the rater-based validation protocol.

mod features;
mod metrics;
mod model;
mod raters;
mod sampling;

use thiserror::Error;

use crate::logdata::QueryEvent;

pub use features::{feature_index, feature_strings, featurize, fnv1a64, tokenize, SparseVector, FEATURE_DIM};
pub use metrics::{evaluate_scores, evaluate_wsm, roc_auc, threshold_metrics, WsmMetrics};
pub use model::{loss_and_gradient, score_query, sigmoid, train_wsm, TrainConfig, TrainingReport, WsmModel};
pub use raters::{aggregate_rater_votes, krippendorff_alpha, JudgmentMatrix, JudgmentRow};
pub use sampling::{
    build_eval_sample, has_foodborne_click, is_weak_positive, weak_label, EvalSample, WeakLabelConfig, FOODBORNE_TAG,
};

#[derive(Debug, Error)]
pub enum WsmError {
    #[error("no weak positives")]
    NoWeakPositives,
    #[error("need {wanted} negatives but only {available} non-positive events exist")]
    NotEnoughNegatives { wanted: usize, available: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("diverged: non-finite loss after epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("{stratum} stratum too small: need {needed} distinct texts, {available} available")]
    StratumTooSmall { stratum: &'static str, needed: usize, available: usize },
    #[error("malformed votes: {0}")]
    MalformedVotes(String),
    #[error("model file has dim {dim} with {weights} weights; expected 50000")]
    ModelDim { dim: usize, weights: usize },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    WeakAuto,
    Rater,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub event: QueryEvent,
    pub label: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub examples: Vec<LabeledExample>,
    pub provenance: Provenance,
}

impl LabeledSet {
    pub fn texts(&self) -> std::collections::HashSet<String> {
        self.examples.iter().map(|e| e.event.text.clone()).collect()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.label).count()
    }
}
