//! Sliding-window segmentation.
//!
//! A window of `beta` frames slides over an `alpha`-frame sequence with step
//! `gamma`, giving `delta = floor((alpha - beta) / gamma) + 1` windows. Frames
//! past the last full window are dropped so every window has exactly `beta`
//! frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::FeatureVector;

/// Window size (`beta`) and step (`gamma`), both in frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowParams {
    beta: usize,
    gamma: usize,
}

impl WindowParams {
    pub fn new(beta: usize, gamma: usize) -> Result<Self> {
        if beta == 0 || gamma == 0 {
            return Err(Error::InvalidWindowParams { beta, gamma });
        }
        Ok(Self { beta, gamma })
    }

    pub fn size(&self) -> usize {
        self.beta
    }

    pub fn step(&self) -> usize {
        self.gamma
    }
}

impl Default for WindowParams {
    fn default() -> Self {
        Self { beta: 16, gamma: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub delta: usize,
}

impl WindowPlan {
    pub fn starts(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.delta).map(move |k| k * self.gamma)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start: usize,
    pub frames: Vec<FeatureVector>,
}

impl Window {
    /// A single window spanning the whole sequence.
    pub fn whole(frames: Vec<FeatureVector>) -> Self {
        Self { start: 0, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Plans windows over `alpha` frames.
///
/// Strict mode also requires `beta <= alpha - gamma`, which guarantees at
/// least two windows. Relaxed mode only requires `beta <= alpha`.
pub fn plan_windows(alpha: usize, params: WindowParams, strict: bool) -> Result<WindowPlan> {
    let WindowParams { beta, gamma } = params;
    if alpha < beta {
        return Err(Error::TrajectoryTooShort { alpha, beta });
    }
    if strict {
        let upper = alpha as i64 - gamma as i64;
        if beta as i64 > upper {
            return Err(Error::ConstraintViolation { beta, upper });
        }
    }
    Ok(WindowPlan {
        alpha,
        beta,
        gamma,
        delta: (alpha - beta) / gamma + 1,
    })
}

pub fn extract_windows(features: &[FeatureVector], plan: &WindowPlan) -> Result<Vec<Window>> {
    if features.len() != plan.alpha {
        return Err(Error::InvalidPlan {
            expected: plan.alpha,
            actual: features.len(),
        });
    }
    Ok(plan
        .starts()
        .map(|start| Window {
            start,
            frames: features[start..start + plan.beta].to_vec(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(n: usize) -> Vec<FeatureVector> {
        (0..n).map(|i| FeatureVector(vec![i as f64, -(i as f64)])).collect()
    }

    fn brute_force_count(alpha: usize, beta: usize, gamma: usize) -> usize {
        let mut count = 0;
        let mut s = 0;
        while s + beta <= alpha {
            count += 1;
            s += gamma;
        }
        count
    }

    #[test]
    fn anchor_case_85_windows() {
        let p = plan_windows(100, WindowParams::new(16, 1).unwrap(), true).unwrap();
        assert_eq!(p.delta, 85);
        let w = extract_windows(&seq(100), &p).unwrap();
        assert_eq!(w.len(), 85);
        assert_eq!(w[0].frames, seq(100)[0..16].to_vec());
        assert_eq!(w[84].start, 84);
        assert_eq!(w[84].frames, seq(100)[84..100].to_vec());
    }

    #[test]
    fn single_window_relaxed_only() {
        let params = WindowParams::new(16, 1).unwrap();
        assert_eq!(plan_windows(16, params, false).unwrap().delta, 1);
        match plan_windows(16, params, true) {
            Err(Error::ConstraintViolation { beta, upper }) => assert_eq!((beta, upper), (16, 15)),
            other => panic!("unexpected {other:?}"),
        }
        let w = extract_windows(&seq(16), &plan_windows(16, params, false).unwrap()).unwrap();
        assert_eq!(w, vec![Window::whole(seq(16))]);
    }

    #[test]
    fn remainder_frames_dropped() {
        let p = plan_windows(10, WindowParams::new(4, 3).unwrap(), false).unwrap();
        assert_eq!(p.delta, 3);
        let w = extract_windows(&seq(10), &p).unwrap();
        assert_eq!(w.iter().map(|w| w.start).collect::<Vec<_>>(), vec![0, 3, 6]);
        assert_eq!(w[2].frames, seq(10)[6..10].to_vec());
    }

    #[test]
    fn too_short_and_bad_params() {
        let p = WindowParams::new(16, 1).unwrap();
        assert!(matches!(
            plan_windows(15, p, false),
            Err(Error::TrajectoryTooShort { alpha: 15, beta: 16 })
        ));
        assert!(WindowParams::new(0, 1).is_err());
        assert!(WindowParams::new(1, 0).is_err());
    }

    #[test]
    fn length_mismatch_is_invalid_plan() {
        let p = plan_windows(10, WindowParams::new(4, 3).unwrap(), false).unwrap();
        assert!(matches!(
            extract_windows(&seq(9), &p),
            Err(Error::InvalidPlan { expected: 10, actual: 9 })
        ));
    }

    proptest! {
        #[test]
        fn count_matches_enumeration(alpha in 1usize..300, beta in 1usize..300, gamma in 1usize..50) {
            match plan_windows(alpha, WindowParams::new(beta, gamma).unwrap(), false) {
                Ok(p) => {
                    prop_assert!(p.delta >= 1);
                    prop_assert_eq!(p.delta, brute_force_count(alpha, beta, gamma));
                }
                Err(_) => prop_assert!(alpha < beta),
            }
        }

        #[test]
        fn windows_are_exact_slices(alpha in 1usize..80, beta in 1usize..80, gamma in 1usize..20) {
            prop_assume!(beta <= alpha);
            let f = seq(alpha);
            let p = plan_windows(alpha, WindowParams::new(beta, gamma).unwrap(), false).unwrap();
            let w = extract_windows(&f, &p).unwrap();
            prop_assert_eq!(w.len(), p.delta);
            for (k, win) in w.iter().enumerate() {
                prop_assert_eq!(win.start, k * gamma);
                prop_assert_eq!(&win.frames[..], &f[win.start..win.start + beta]);
            }
        }
    }
}
