//! Template-similarity filter for dataset expansion.
//!
//! Each candidate crop embedding is scored against a handful of template
//! embeddings by cosine similarity; candidates scoring at or above the
//! threshold are kept.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An encoder feature vector for one image crop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    id: String,
    label: Option<String>,
    vec: Vec<f64>,
}

impl Embedding {
    /// Rejects empty, non-finite, and all-zero vectors.
    pub fn new(id: impl Into<String>, vec: Vec<f64>, label: Option<String>) -> Result<Self> {
        let id = id.into();
        let reason = if vec.is_empty() {
            Some("empty vector")
        } else if vec.iter().any(|v| !v.is_finite()) {
            Some("non-finite entry")
        } else if vec.iter().all(|&v| v == 0.0) {
            Some("zero vector")
        } else {
            None
        };
        match reason {
            Some(reason) => Err(Error::DegenerateEmbedding { id, reason }),
            None => Ok(Self { id, label, vec }),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn vec(&self) -> &[f64] {
        &self.vec
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }
}

/// Cosine similarity of two raw vectors.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            what: "embedding dimension",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::DegenerateEmbedding {
            id: String::new(),
            reason: "zero vector",
        });
    }
    Ok(ab / (aa.sqrt() * bb.sqrt()))
}

pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine(&a.vec, &b.vec)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Cosine,
}

/// How per-template similarities combine into one candidate score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            other => Err(format!("unknown aggregation `{other}` (expected max or mean)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub metric: Metric,
    threshold: f64,
    pub aggregation: Aggregation,
}

impl FilterPolicy {
    pub const DEFAULT_THRESHOLD: f64 = 0.85;

    pub fn new(threshold: f64, aggregation: Aggregation) -> Result<Self> {
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidThreshold(threshold));
        }
        Ok(Self {
            metric: Metric::Cosine,
            threshold,
            aggregation,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self {
            metric: Metric::Cosine,
            threshold: Self::DEFAULT_THRESHOLD,
            aggregation: Aggregation::Max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub accepted: Vec<String>,
    pub rejected: Vec<String>,
    /// Candidate id to score, in candidate order.
    pub scores: IndexMap<String, f64>,
    pub acceptance_rate: f64,
}

/// Aggregated template similarity of every candidate, in candidate order.
pub fn score_candidates(
    templates: &[Embedding],
    candidates: &[Embedding],
    aggregation: Aggregation,
) -> Result<Vec<f64>> {
    let first = templates.first().ok_or(Error::NoTemplates)?;
    let dim = first.dim();
    if let Some(bad) = templates
        .iter()
        .chain(candidates)
        .find(|e| e.dim() != dim)
    {
        return Err(Error::Shape {
            what: "embedding dimension",
            expected: dim,
            actual: bad.dim(),
        });
    }
    candidates
        .iter()
        .map(|c| {
            let sims = templates
                .iter()
                .map(|t| cosine_similarity(c, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(match aggregation {
                Aggregation::Max => sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Aggregation::Mean => sims.iter().sum::<f64>() / sims.len() as f64,
            })
        })
        .collect()
}

pub fn filter_candidates(
    templates: &[Embedding],
    candidates: &[Embedding],
    policy: &FilterPolicy,
) -> Result<FilterReport> {
    let scores = score_candidates(templates, candidates, policy.aggregation)?;
    let mut report = FilterReport {
        accepted: Vec::new(),
        rejected: Vec::new(),
        scores: IndexMap::with_capacity(candidates.len()),
        acceptance_rate: 0.0,
    };
    for (c, &s) in candidates.iter().zip(&scores) {
        if report.scores.insert(c.id().to_string(), s).is_some() {
            return Err(Error::DuplicateId(c.id().to_string()));
        }
        if s >= policy.threshold {
            report.accepted.push(c.id().to_string());
        } else {
            report.rejected.push(c.id().to_string());
        }
    }
    if !candidates.is_empty() {
        report.acceptance_rate = report.accepted.len() as f64 / candidates.len() as f64;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tau: f64,
    /// `None` when nothing is accepted.
    pub precision: Option<f64>,
    pub recall: f64,
    pub accepted: usize,
}

/// Precision and recall at each threshold. `labeled` pairs each candidate
/// with whether it truly belongs to the template class.
pub fn sweep_threshold(
    templates: &[Embedding],
    labeled: &[(Embedding, bool)],
    taus: &[f64],
    aggregation: Aggregation,
) -> Result<Vec<SweepPoint>> {
    let positives = labeled.iter().filter(|(_, pos)| *pos).count();
    if positives == 0 {
        return Err(Error::UndefinedRecall);
    }
    let candidates: Vec<Embedding> = labeled.iter().map(|(e, _)| e.clone()).collect();
    let scores = score_candidates(templates, &candidates, aggregation)?;
    Ok(taus
        .iter()
        .map(|&tau| {
            let (mut accepted, mut hits) = (0usize, 0usize);
            for (&s, (_, pos)) in scores.iter().zip(labeled) {
                if s >= tau {
                    accepted += 1;
                    hits += usize::from(*pos);
                }
            }
            SweepPoint {
                tau,
                precision: (accepted > 0).then(|| hits as f64 / accepted as f64),
                recall: hits as f64 / positives as f64,
                accepted,
            }
        })
        .collect())
}
