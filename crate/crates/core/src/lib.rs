//! Skeleton-trajectory action recognition.
//!
//! Hand-skeleton trajectories are cut into fixed-length sliding windows, each
//! window is classified by a small LSTM, and the per-window labels are
//! majority-voted into one action label. The crate also carries the
//! template-similarity filter used to grow a training set from a few
//! hand-picked exemplars, plus seeded synthetic data for both.
//!
//! ```
//! use sbt_core::windowing::{plan_windows, WindowParams};
//!
//! let plan = plan_windows(100, WindowParams::new(16, 1)?, true)?;
//! assert_eq!(plan.delta, 85);
//! # Ok::<(), sbt_core::Error>(())
//! ```

pub mod aggregation;
pub mod checkpoint;
pub mod codec;
pub mod error;
pub mod filter;
pub mod model;
pub mod synth;
pub mod trajectory;
pub mod windowing;

pub use aggregation::{
    classify_action, evaluate, majority_vote, training_set, Classes, EvalReport, Pipeline, VoteResult, Windowing,
};
pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use filter::{
    cosine_similarity, filter_candidates, sweep_threshold, Aggregation, Embedding, FilterPolicy,
    FilterReport,
};
pub use model::{train, ClassDistribution, ModelConfig, TemporalModel, TrainOptions};
pub use trajectory::{
    encode_frames, normalize, select_joints, FeatureVector, JointSelection, JointSet,
    NormalizeMode, SkeletonFrame, Trajectory,
};
pub use windowing::{extract_windows, plan_windows, Window, WindowParams, WindowPlan};
