//! JSON-Lines codecs for trajectory and embedding files.
//!
//! Trajectory line:
//! `{"id": str, "label": str|null, "fps": number|null, "joints": J, "frames": [[[x,y],...],...]}`
//!
//! Embedding line: `{"id": str, "label": str|null, "vec": [...]}`
//!
//! Floats are written in shortest round-trip form and parsed with exact
//! rounding, so write-then-read is bit-exact.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::Embedding;
use crate::trajectory::{Point, SkeletonFrame, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryRecord {
    id: String,
    label: Option<String>,
    fps: Option<f64>,
    joints: usize,
    frames: Vec<Vec<Point>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingRecord {
    id: String,
    label: Option<String>,
    vec: Vec<f64>,
}

pub fn trajectory_to_line(traj: &Trajectory) -> Result<String> {
    let rec = TrajectoryRecord {
        id: traj.id().to_string(),
        label: traj.label().map(str::to_string),
        fps: traj.fps(),
        joints: traj.joint_count(),
        frames: traj.frames().iter().map(|f| f.points.clone()).collect(),
    };
    Ok(serde_json::to_string(&rec)?)
}

pub fn trajectory_from_line(line: &str) -> Result<Trajectory> {
    let rec: TrajectoryRecord = serde_json::from_str(line)?;
    Trajectory::new(
        rec.id,
        rec.frames.into_iter().map(SkeletonFrame::new).collect(),
        rec.joints,
        rec.label,
        rec.fps,
    )
}

pub fn embedding_to_line(emb: &Embedding) -> Result<String> {
    let rec = EmbeddingRecord {
        id: emb.id().to_string(),
        label: emb.label().map(str::to_string),
        vec: emb.vec().to_vec(),
    };
    Ok(serde_json::to_string(&rec)?)
}

pub fn embedding_from_line(line: &str) -> Result<Embedding> {
    let rec: EmbeddingRecord = serde_json::from_str(line)?;
    Embedding::new(rec.id, rec.vec, rec.label)
}

fn read_lines<T, R: BufRead>(reader: R, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line).map_err(|e| Error::Parse {
            line: n + 1,
            source: Box::new(e),
        })?);
    }
    Ok(out)
}

fn write_lines<T, W: Write>(
    mut writer: W,
    items: &[T],
    encode: impl Fn(&T) -> Result<String>,
) -> Result<()> {
    for item in items {
        writer.write_all(encode(item)?.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trajectories<R: BufRead>(reader: R) -> Result<Vec<Trajectory>> {
    read_lines(reader, trajectory_from_line)
}

pub fn write_trajectories<W: Write>(writer: W, trajs: &[Trajectory]) -> Result<()> {
    write_lines(writer, trajs, trajectory_to_line)
}

/// Reads embeddings, rejecting mixed dimensions.
pub fn read_embeddings<R: BufRead>(reader: R) -> Result<Vec<Embedding>> {
    let embs = read_lines(reader, embedding_from_line)?;
    if let Some(first) = embs.first() {
        let dim = first.dim();
        if let Some((n, bad)) = embs.iter().enumerate().find(|(_, e)| e.dim() != dim) {
            return Err(Error::Parse {
                line: n + 1,
                source: Box::new(Error::Shape {
                    what: "embedding dimension",
                    expected: dim,
                    actual: bad.dim(),
                }),
            });
        }
    }
    Ok(embs)
}

pub fn write_embeddings<W: Write>(writer: W, embs: &[Embedding]) -> Result<()> {
    write_lines(writer, embs, embedding_to_line)
}
