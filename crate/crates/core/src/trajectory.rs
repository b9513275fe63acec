//! Hand-skeleton trajectories and the per-frame feature encoding fed to the
//! temporal model.
//!
//! A [`Trajectory`] is `alpha` frames of `J` two-dimensional joints. The
//! pipeline narrows it to a [`JointSet`], optionally normalizes each frame,
//! and flattens every frame into a [`FeatureVector`] of `2 * J` values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2D keypoint, `[x, y]`.
pub type Point = [f64; 2];

/// Number of joints in the full hand layout.
pub const FULL_HAND_JOINTS: usize = 40;
/// Number of joints on the thumb and index finger.
pub const ACTIVE_HAND_JOINTS: usize = 18;

/// An ordered, duplicate-free subset of joint indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "JointSetRepr", into = "JointSetRepr")]
pub struct JointSet {
    name: String,
    indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct JointSetRepr {
    name: String,
    indices: Vec<usize>,
}

impl TryFrom<JointSetRepr> for JointSet {
    type Error = Error;

    fn try_from(r: JointSetRepr) -> Result<Self> {
        JointSet::new(r.name, r.indices)
    }
}

impl From<JointSet> for JointSetRepr {
    fn from(j: JointSet) -> Self {
        JointSetRepr {
            name: j.name,
            indices: j.indices,
        }
    }
}

impl JointSet {
    pub fn new(name: impl Into<String>, indices: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if indices.is_empty() {
            return Err(Error::MalformedJointSet {
                name,
                reason: "no indices".into(),
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedJointSet {
                name,
                reason: "indices must be strictly increasing".into(),
            });
        }
        Ok(Self { name, indices })
    }

    /// All joints `0..count`.
    pub fn all(count: usize) -> Result<Self> {
        Self::new(format!("all{count}"), (0..count).collect())
    }

    /// The 40-joint full hand layout.
    pub fn full_hand() -> Self {
        Self::all(FULL_HAND_JOINTS).expect("non-empty")
    }

    /// Thumb and index finger joints. The layout convention stores these as
    /// the first 18 joints of the full hand.
    pub fn active_hand() -> Self {
        Self {
            name: "active18".into(),
            indices: (0..ACTIVE_HAND_JOINTS).collect(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_index(&self) -> usize {
        *self.indices.last().expect("non-empty by construction")
    }
}

/// Which joints a pipeline keeps. `All` resolves against each trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointSelection {
    All,
    Set(JointSet),
}

impl JointSelection {
    /// Parses `all`, `full40`, `active18`, or a comma-separated index list.
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Self::All),
            "full40" => Ok(Self::Set(JointSet::full_hand())),
            "active18" => Ok(Self::Set(JointSet::active_hand())),
            list => {
                let indices = list
                    .split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::MalformedJointSet {
                        name: list.to_string(),
                        reason: e.to_string(),
                    })?;
                Ok(Self::Set(JointSet::new("custom", indices)?))
            }
        }
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<Trajectory> {
        match self {
            Self::All => Ok(traj.clone()),
            Self::Set(set) => select_joints(traj, set),
        }
    }

    /// Joint count after selection from a trajectory with `joint_count` joints.
    pub fn output_joints(&self, joint_count: usize) -> usize {
        match self {
            Self::All => joint_count,
            Self::Set(set) => set.len(),
        }
    }
}

/// One frame of joint positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkeletonFrame {
    pub points: Vec<Point>,
}

impl SkeletonFrame {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }
}

/// A labeled or unlabeled sequence of skeleton frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    id: String,
    frames: Vec<SkeletonFrame>,
    joint_count: usize,
    label: Option<String>,
    fps: Option<f64>,
}

impl Trajectory {
    /// Validates frame shapes and coordinate finiteness.
    pub fn new(
        id: impl Into<String>,
        frames: Vec<SkeletonFrame>,
        joint_count: usize,
        label: Option<String>,
        fps: Option<f64>,
    ) -> Result<Self> {
        let id = id.into();
        let invalid = |reason: String| Error::InvalidTrajectory {
            id: id.clone(),
            reason,
        };
        if frames.is_empty() {
            return Err(invalid("no frames".into()));
        }
        if joint_count == 0 {
            return Err(invalid("joint count is zero".into()));
        }
        if let Some(fps) = fps {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(invalid(format!("fps {fps} is not a positive number")));
            }
        }
        for (f, frame) in frames.iter().enumerate() {
            if frame.points.len() != joint_count {
                return Err(invalid(format!(
                    "frame {f} has {} points, expected {joint_count}",
                    frame.points.len()
                )));
            }
            if frame.points.iter().flatten().any(|c| !c.is_finite()) {
                return Err(invalid(format!("frame {f} has a non-finite coordinate")));
            }
        }
        Ok(Self {
            id,
            frames,
            joint_count,
            label,
            fps,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frames(&self) -> &[SkeletonFrame] {
        &self.frames
    }

    /// Frame count (`alpha`).
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn joint_count(&self) -> usize {
        self.joint_count
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn fps(&self) -> Option<f64> {
        self.fps
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    // Frames are already validated; used by transforms that preserve shape.
    fn with_frames(&self, frames: Vec<SkeletonFrame>, joint_count: usize) -> Self {
        Self {
            id: self.id.clone(),
            frames,
            joint_count,
            label: self.label.clone(),
            fps: self.fps,
        }
    }
}

/// Flattened per-frame model input: `[x0, y0, x1, y1, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Coordinate preprocessing applied per frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    #[default]
    None,
    /// Translate joint 0 to the origin and scale by the bounding-box diagonal.
    AnchorScale,
}

impl std::str::FromStr for NormalizeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" => Ok(Self::None),
            "anchor_scale" | "anchor-scale" => Ok(Self::AnchorScale),
            other => Err(format!("unknown normalize mode `{other}`")),
        }
    }
}

/// Keeps only the joints in `joints`, in set order.
pub fn select_joints(traj: &Trajectory, joints: &JointSet) -> Result<Trajectory> {
    if let Some(&bad) = joints.indices().iter().find(|&&i| i >= traj.joint_count()) {
        return Err(Error::InvalidJointSet {
            index: bad,
            joint_count: traj.joint_count(),
        });
    }
    let frames = traj
        .frames()
        .iter()
        .map(|fr| SkeletonFrame::new(joints.indices().iter().map(|&i| fr.points[i]).collect()))
        .collect();
    Ok(traj.with_frames(frames, joints.len()))
}

pub fn normalize(traj: &Trajectory, mode: NormalizeMode) -> Trajectory {
    match mode {
        NormalizeMode::None => traj.clone(),
        NormalizeMode::AnchorScale => {
            let frames = traj.frames().iter().map(anchor_scale_frame).collect();
            traj.with_frames(frames, traj.joint_count())
        }
    }
}

fn anchor_scale_frame(frame: &SkeletonFrame) -> SkeletonFrame {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &frame.points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let diag = (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    if diag == 0.0 {
        return SkeletonFrame::new(vec![[0.0, 0.0]; frame.points.len()]);
    }
    let anchor = frame.points[0];
    SkeletonFrame::new(
        frame
            .points
            .iter()
            .map(|p| [(p[0] - anchor[0]) / diag, (p[1] - anchor[1]) / diag])
            .collect(),
    )
}

pub fn encode_frames(traj: &Trajectory) -> Vec<FeatureVector> {
    traj.frames()
        .iter()
        .map(|fr| FeatureVector(fr.points.iter().flat_map(|p| [p[0], p[1]]).collect()))
        .collect()
}
