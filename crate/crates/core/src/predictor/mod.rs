//! Persona classification and threshold prediction.

mod cluster;
mod features;
mod io;
mod model;

pub use cluster::{behaviour_vectors, cluster_personas, kmeans, relabel_with_clusters, Clustering, BEHAVIOUR_DIM, MAX_ITERATIONS};
pub use features::{preprocess, FeatureVector, APPLICATION, DIM, LOCATION, PHASE, SPEED, SPEED_SCALE_MPS, TIME};
pub use io::{from_text, read_model, to_text, write_model, FORMAT_HEADER};
pub use model::{
    holdout_split, train, Bucket, BucketKey, LearningParams, Observation, PersonaClass, PersonaProbVector, SplitKind,
    TrainReport, TwoPhaseModel, UpdateOutcome, HOLDOUT_BLOCK_S, HOLDOUT_EVERY, MIN_USERS_FOR_USER_SPLIT,
};
