use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid joint set: index {index} out of range for {joint_count} joints")]
    InvalidJointSet { index: usize, joint_count: usize },

    #[error("invalid joint set `{name}`: {reason}")]
    MalformedJointSet { name: String, reason: String },

    #[error("invalid trajectory `{id}`: {reason}")]
    InvalidTrajectory { id: String, reason: String },

    #[error("invalid window parameters: size {beta} and step {gamma} must both be >= 1")]
    InvalidWindowParams { beta: usize, gamma: usize },

    #[error("trajectory too short: {alpha} frames for a window of {beta}")]
    TrajectoryTooShort { alpha: usize, beta: usize },

    #[error("window size {beta} violates the strict bound beta <= alpha - gamma = {upper}")]
    ConstraintViolation { beta: usize, upper: i64 },

    #[error("invalid window plan: plan expects {expected} frames, got {actual}")]
    InvalidPlan { expected: usize, actual: usize },

    #[error("shape mismatch in {what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid model config: {0}")]
    InvalidConfig(String),

    #[error("label {label} out of range for {num_classes} classes")]
    Label { label: usize, num_classes: usize },

    #[error("label `{0}` is not in the class vocabulary")]
    UnknownLabel(String),

    #[error("trajectory `{id}` has no label")]
    MissingLabel { id: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("degenerate embedding `{id}`: {reason}")]
    DegenerateEmbedding { id: String, reason: &'static str },

    #[error("no template embeddings")]
    NoTemplates,

    #[error("recall undefined: ground truth has no positive candidates")]
    UndefinedRecall,

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("threshold {0} outside [-1, 1]")]
    InvalidThreshold(f64),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by numeric blow-up rather than bad input.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::Parse { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
