//! Per-individual AR model banks and the ways of choosing among them.

mod bank;
mod classifier;
mod oracle;

pub use bank::{fit_channel, train_bank, BankConfig, IndividualData, ModelBank};
pub use classifier::{
    classifier_predict, classifier_train, training_windows, window_features, ClassifierConfig, FeatureMap,
    LinearClassifier,
};
pub use oracle::{
    candidate_errors, model_errors, oracle_classify, oracle_classify_per_dimension, oracle_refit, CandidateErrors,
    SelectionConfig, SelectionLoss,
};
