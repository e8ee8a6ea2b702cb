//! Feature extraction and the log-linear transition classifier.

mod features;
mod model;

use thiserror::Error;

use crate::corpus::LinguisticToken;
use crate::transition::{ParserState, Transition};

pub use features::{extract_features, FeatureVector, CODE_LABEL};
pub use model::{instances_from_sequence, train, Gradient, ScorerModel, TrainConfig, TrainingInstance, TrainingMeta};

#[derive(Debug, Error, PartialEq)]
pub enum ScorerError {
    #[error("no legal transitions in state {0}")]
    NoLegalTransitions(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("model i/o: {0}")]
    Io(String),
    #[error("malformed model: {0}")]
    Format(String),
    #[error("invalid training configuration: {0}")]
    Config(String),
}

/// Assigns log-probabilities to the legal transitions of a state.
pub trait TransitionScorer: Send + Sync {
    fn score(&self, state: &ParserState, tokens: &[LinguisticToken])
        -> Result<Vec<(Transition, f64)>, ScorerError>;
}
