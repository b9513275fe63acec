//! Seeded synthetic data: hand gestures and clustered embeddings.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::filter::Embedding;
use crate::trajectory::{Point, SkeletonFrame, Trajectory};

/// Total horizontal travel of the hand centroid for insert/unplug.
pub const TRAVEL: f64 = 0.5;
/// Radius of the ring the joints sit on around the centroid.
const HAND_RADIUS: f64 = 0.04;
const FPS: f64 = 30.0;
pub const TEMPLATE_COUNT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionKind {
    /// Centroid moves `+TRAVEL` along x.
    Insert,
    /// Centroid moves `-TRAVEL` along x.
    Unplug,
    /// Stationary; only jitter.
    Idle,
}

impl MotionKind {
    pub const ALL: [MotionKind; 3] = [Self::Insert, Self::Unplug, Self::Idle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Insert => "insert",
            Self::Unplug => "unplug",
            Self::Idle => "idle",
        }
    }

    fn travel(self) -> f64 {
        match self {
            Self::Insert => TRAVEL,
            Self::Unplug => -TRAVEL,
            Self::Idle => 0.0,
        }
    }

    fn sample_start(self, rng: &mut impl Rng) -> Point {
        let x = match self {
            Self::Insert => rng.gen_range(0.15..0.35),
            Self::Unplug => rng.gen_range(0.65..0.85),
            Self::Idle => rng.gen_range(0.3..0.7),
        };
        [x, rng.gen_range(0.3..0.7)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureSpec {
    pub class: String,
    pub kind: MotionKind,
    pub frames: usize,
    pub joints: usize,
    pub noise: f64,
    pub seed: u64,
    /// Centroid at frame 0; sampled from the seed when absent.
    pub start: Option<Point>,
}

/// Generates one gesture. The centroid moves linearly from frame 0 to frame
/// `frames - 1`; joints sit on a ring around it (a single joint sits on the
/// centroid) and get independent Gaussian jitter. Coordinates are clamped to
/// `[0, 1]`.
pub fn gen_trajectory(spec: &GestureSpec) -> Trajectory {
    assert!(spec.frames >= 1 && spec.joints >= 1 && spec.noise >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let start = spec.start.unwrap_or_else(|| spec.kind.sample_start(&mut rng));
    let rotation = rng.gen_range(0.0..TAU);
    let offsets: Vec<Point> = if spec.joints == 1 {
        vec![[0.0, 0.0]]
    } else {
        (0..spec.joints)
            .map(|k| {
                let a = rotation + TAU * k as f64 / spec.joints as f64;
                [HAND_RADIUS * a.cos(), HAND_RADIUS * a.sin()]
            })
            .collect()
    };
    let jitter = Normal::new(0.0, spec.noise).expect("noise is a valid std-dev");
    let span = (spec.frames.max(2) - 1) as f64;

    let frames = (0..spec.frames)
        .map(|f| {
            let cx = start[0] + spec.kind.travel() * f as f64 / span;
            let points = offsets
                .iter()
                .map(|o| {
                    let x = cx + o[0] + jitter.sample(&mut rng);
                    let y = start[1] + o[1] + jitter.sample(&mut rng);
                    [x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)]
                })
                .collect();
            SkeletonFrame::new(points)
        })
        .collect();
    Trajectory::new(
        format!("{}-{:016x}", spec.kind.name(), spec.seed),
        frames,
        spec.joints,
        Some(spec.class.clone()),
        Some(FPS),
    )
    .expect("generated frames are valid")
}

/// A labeled train/test gesture benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    /// 2 for insert/unplug, 3 adds idle.
    pub classes: usize,
    pub train: usize,
    pub test: usize,
    pub frames_min: usize,
    pub frames_max: usize,
    pub joints: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            classes: 3,
            train: 300,
            test: 100,
            frames_min: 60,
            frames_max: 140,
            joints: 18,
            noise: 0.02,
            seed: 0,
        }
    }
}

/// Class-balanced train and test sets; every item gets its own seed drawn
/// from `spec.seed`.
pub fn gen_benchmark(spec: &BenchmarkSpec) -> (Vec<Trajectory>, Vec<Trajectory>) {
    assert!((1..=3).contains(&spec.classes));
    assert!(spec.frames_min >= 1 && spec.frames_min <= spec.frames_max);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = |prefix: &str, n: usize| -> Vec<Trajectory> {
        (0..n)
            .map(|i| {
                let kind = MotionKind::ALL[i % spec.classes];
                let g = GestureSpec {
                    class: kind.name().to_string(),
                    kind,
                    frames: rng.gen_range(spec.frames_min..=spec.frames_max),
                    joints: spec.joints,
                    noise: spec.noise,
                    seed: rng.next_u64(),
                    start: None,
                };
                let t = gen_trajectory(&g);
                Trajectory::new(
                    format!("{prefix}-{i:05}"),
                    t.frames().to_vec(),
                    t.joint_count(),
                    t.label().map(str::to_string),
                    t.fps(),
                )
                .expect("valid")
            })
            .collect()
    };
    let train = split("train", spec.train);
    let test = split("test", spec.test);
    (train, test)
}

/// Label given to in-class generated candidates and templates.
pub const IN_LABEL: &str = "in";
pub const OUT_LABEL: &str = "out";

/// Two Gaussian clusters at `+mu * e1` (in-class) and `-mu * e1`
/// (out-of-class) with unit noise. Returns [`TEMPLATE_COUNT`] in-class
/// templates and the shuffled candidates paired with their ground truth.
pub fn gen_embedding_clusters(
    dim: usize,
    n_in: usize,
    n_out: usize,
    mu: f64,
    seed: u64,
) -> (Vec<Embedding>, Vec<(Embedding, bool)>) {
    assert!(dim >= 1 && mu >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |sign: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim)
            .map(|d| {
                let z: f64 = StandardNormal.sample(rng);
                if d == 0 {
                    sign * mu + z
                } else {
                    z
                }
            })
            .collect()
    };
    let templates = (0..TEMPLATE_COUNT)
        .map(|i| {
            let v = draw(1.0, &mut rng);
            Embedding::new(format!("tmpl-{i:02}"), v, Some(IN_LABEL.into())).expect("non-zero draw")
        })
        .collect();
    let mut truth: Vec<bool> = std::iter::repeat(true)
        .take(n_in)
        .chain(std::iter::repeat(false).take(n_out))
        .collect();
    truth.shuffle(&mut rng);
    let candidates = truth
        .into_iter()
        .enumerate()
        .map(|(i, pos)| {
            let v = draw(if pos { 1.0 } else { -1.0 }, &mut rng);
            let label = if pos { IN_LABEL } else { OUT_LABEL };
            let e = Embedding::new(format!("cand-{i:05}"), v, Some(label.into())).expect("non-zero draw");
            (e, pos)
        })
        .collect();
    (templates, candidates)
}
