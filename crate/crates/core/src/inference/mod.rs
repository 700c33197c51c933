//! Tree-ensemble classifiers and the cascaded configuration predictor.

mod cascade;
mod model;

pub use cascade::{
    cascade_predict, cascade_predict_cancellable, CascadeDecision, CascadeError, CascadeModel,
    CascadeModelSet, CascadeStage,
};
pub use model::{
    predict_class, Classifier, ModelError, ModelFile, Node, Prediction, Tree, TreeEnsembleModel,
    SCHEMA_VERSION,
};
