//! Action-level recognition: window every trajectory, classify each window,
//! and take the majority vote.
//!
//! Vote ties go to the tied class with the largest summed winning-window
//! confidence, then to the smallest class index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TemporalModel;
use crate::trajectory::{encode_frames, normalize, JointSelection, NormalizeMode, Trajectory};
use crate::windowing::{extract_windows, plan_windows, Window, WindowParams};

/// How a trajectory is cut into model inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Windowing {
    Sliding { params: WindowParams, strict: bool },
    /// One input per trajectory, the whole sequence (no voting).
    WholeSequence,
}

impl Default for Windowing {
    fn default() -> Self {
        Self::Sliding {
            params: WindowParams::default(),
            strict: false,
        }
    }
}

/// Preprocessing shared by training and inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub joints: JointSelection,
    pub normalize: NormalizeMode,
    pub windowing: Windowing,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self {
            joints: JointSelection::All,
            normalize: NormalizeMode::None,
            windowing: Windowing::default(),
        }
    }
}

impl Pipeline {
    pub fn sliding(params: WindowParams) -> Self {
        Self {
            windowing: Windowing::Sliding {
                params,
                strict: false,
            },
            ..Self::default()
        }
    }

    /// Model input width for trajectories with `joint_count` joints.
    pub fn input_dim(&self, joint_count: usize) -> usize {
        2 * self.joints.output_joints(joint_count)
    }

    /// select joints -> normalize -> encode -> extract windows.
    pub fn windows(&self, traj: &Trajectory) -> Result<Vec<Window>> {
        let selected = self.joints.apply(traj)?;
        let features = encode_frames(&normalize(&selected, self.normalize));
        match self.windowing {
            Windowing::Sliding { params, strict } => {
                let plan = plan_windows(features.len(), params, strict)?;
                extract_windows(&features, &plan)
            }
            Windowing::WholeSequence => Ok(vec![Window::whole(features)]),
        }
    }
}

/// Ordered class vocabulary; position is the model's class index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Classes(Vec<String>);

impl Classes {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if !seen.insert(n) {
                return Err(Error::DuplicateId(n.clone()));
            }
        }
        Ok(Self(names))
    }

    /// Sorted distinct labels of the labeled trajectories.
    pub fn from_trajectories(trajs: &[Trajectory]) -> Self {
        let set: std::collections::BTreeSet<&str> = trajs.iter().filter_map(|t| t.label()).collect();
        Self(set.into_iter().map(str::to_string).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.0[idx]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.0
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn label_of(&self, traj: &Trajectory) -> Result<usize> {
        let label = traj.label().ok_or_else(|| Error::MissingLabel {
            id: traj.id().to_string(),
        })?;
        self.index_of(label)
    }
}

/// Default cap on training windows drawn from one trajectory.
pub const DEFAULT_WINDOWS_PER_TRAJECTORY: usize = 16;

/// Labeled training inputs built from trajectories.
#[derive(Debug, Clone, Default)]
pub struct TrainingSet {
    pub examples: Vec<(Window, usize)>,
    /// Ids of trajectories too short for one window.
    pub skipped: Vec<String>,
}

/// Windows every labeled trajectory. At most `per_trajectory` evenly spaced
/// windows are kept from each one (`None` keeps all). Trajectories shorter
/// than the window are skipped and reported.
pub fn training_set(
    trajs: &[Trajectory],
    classes: &Classes,
    pipeline: &Pipeline,
    per_trajectory: Option<usize>,
) -> Result<TrainingSet> {
    let mut set = TrainingSet::default();
    for traj in trajs {
        let label = classes.label_of(traj)?;
        let windows = match pipeline.windows(traj) {
            Ok(w) => w,
            Err(Error::TrajectoryTooShort { .. }) => {
                set.skipped.push(traj.id().to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        let delta = windows.len();
        match per_trajectory {
            Some(cap) if cap < delta => {
                let mut windows: Vec<Option<Window>> = windows.into_iter().map(Some).collect();
                for k in 0..cap {
                    let w = windows[k * delta / cap].take().expect("indices are distinct");
                    set.examples.push((w, label));
                }
            }
            _ => set.examples.extend(windows.into_iter().map(|w| (w, label))),
        }
    }
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub start: usize,
    pub class: usize,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteResult {
    pub histogram: BTreeMap<usize, usize>,
    pub per_window: Vec<WindowPrediction>,
    pub final_label: usize,
    pub tie_broken: bool,
}

/// Majority vote over window predictions.
pub fn majority_vote(per_window: Vec<WindowPrediction>) -> Result<VoteResult> {
    if per_window.is_empty() {
        return Err(Error::Empty("window predictions"));
    }
    let mut histogram = BTreeMap::new();
    let mut confidence: BTreeMap<usize, f64> = BTreeMap::new();
    for w in &per_window {
        *histogram.entry(w.class).or_insert(0) += 1;
        *confidence.entry(w.class).or_insert(0.0) += w.prob;
    }
    let top = *histogram.values().max().expect("non-empty");
    let tied: Vec<usize> = histogram
        .iter()
        .filter(|(_, &n)| n == top)
        .map(|(&c, _)| c)
        .collect();

    // BTreeMap iteration is ascending, so the first strict maximum is the
    // smallest index among equal confidences.
    let mut final_label = tied[0];
    for &c in &tied[1..] {
        if confidence[&c] > confidence[&final_label] {
            final_label = c;
        }
    }
    Ok(VoteResult {
        histogram,
        per_window,
        final_label,
        tie_broken: tied.len() > 1,
    })
}

pub fn classify_action(
    model: &TemporalModel,
    traj: &Trajectory,
    pipeline: &Pipeline,
) -> Result<VoteResult> {
    let per_window = pipeline
        .windows(traj)?
        .iter()
        .map(|w| {
            let dist = model.forward(w)?;
            let class = dist.argmax();
            Ok(WindowPrediction {
                start: w.start,
                class,
                prob: dist.probs[class],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    majority_vote(per_window)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub id: String,
    pub label: String,
    pub predicted: String,
    pub windows: usize,
    pub correct_windows: usize,
    pub tie_broken: bool,
    pub histogram: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub action_accuracy: f64,
    pub window_accuracy: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub classes: Vec<String>,
    pub per_trajectory: Vec<TrajectoryOutcome>,
}

pub fn evaluate(
    model: &TemporalModel,
    classes: &Classes,
    trajs: &[Trajectory],
    pipeline: &Pipeline,
) -> Result<EvalReport> {
    if trajs.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let truths = trajs
        .iter()
        .map(|t| classes.label_of(t))
        .collect::<Result<Vec<_>>>()?;
    let votes = trajs
        .iter()
        .map(|t| classify_action(model, t, pipeline))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(classes, trajs, &truths, &votes))
}

fn summarize(
    classes: &Classes,
    trajs: &[Trajectory],
    truths: &[usize],
    votes: &[VoteResult],
) -> EvalReport {
    let mut confusion = vec![vec![0; classes.len()]; classes.len()];
    let (mut hits, mut windows, mut window_hits) = (0usize, 0usize, 0usize);
    let mut per_trajectory = Vec::with_capacity(trajs.len());
    for ((traj, &truth), vote) in trajs.iter().zip(truths).zip(votes) {
        confusion[truth][vote.final_label] += 1;
        hits += usize::from(vote.final_label == truth);
        let correct = vote.per_window.iter().filter(|w| w.class == truth).count();
        windows += vote.per_window.len();
        window_hits += correct;
        per_trajectory.push(TrajectoryOutcome {
            id: traj.id().to_string(),
            label: classes.name(truth).to_string(),
            predicted: classes.name(vote.final_label).to_string(),
            windows: vote.per_window.len(),
            correct_windows: correct,
            tie_broken: vote.tie_broken,
            histogram: vote
                .histogram
                .iter()
                .map(|(&c, &n)| (classes.name(c).to_string(), n))
                .collect(),
        });
    }
    EvalReport {
        action_accuracy: hits as f64 / trajs.len() as f64,
        window_accuracy: window_hits as f64 / windows as f64,
        confusion,
        classes: classes.names().to_vec(),
        per_trajectory,
    }
}
