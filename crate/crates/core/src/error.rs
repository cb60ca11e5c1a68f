use alloc::string::String;

/// Errors produced by the analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("face {face_id}: embedding has {len} components, expected 128")]
    EmbeddingArity { face_id: String, len: usize },
    #[error("face {face_id}: embedding contains a non-finite value")]
    NonFiniteEmbedding { face_id: String },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the two partitions share no labelled elements")]
    EmptyIntersection,
    #[error("no face carries a source label in a single-face image")]
    NoGroundTruth,
    #[error("unknown cluster id {0}")]
    UnknownCluster(usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("degenerate sample: {0}")]
    DegenerateSample(&'static str),
    #[error("graph is not connected")]
    Disconnected,
    #[error("did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("singular design: regressor is constant")]
    SingularDesign,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("cannot remove {requested} nodes out of {available}")]
    RemovalOutOfRange { requested: usize, available: usize },
    #[error("edge count {m} outside 0..={max}")]
    EdgeCountOutOfRange { m: usize, max: usize },
    #[error("node attribute `{0}` missing")]
    MissingAttribute(String),
    #[error("model degeneracy: simulated density {simulated:.4} vs observed {observed:.4}")]
    Degenerate { simulated: f64, observed: f64 },
    #[error("no watchlist entry carries an embedding")]
    NoEmbeddings,
    #[error("empty corpus")]
    EmptyCorpus,
}

pub type Result<T> = core::result::Result<T, Error>;
