//! Versioned JSON checkpoints.
//!
//! ```text
//! {"format": "sbt-model-v1",
//!  "config": {"input_dim", "hidden_dim", "num_classes", "seed"},
//!  "classes": [...], "pipeline": {...},
//!  "params": {"w_input": [...], ..., "w_head": [...], "b_head": [...]}}
//! ```
//!
//! Gate matrices are `H x (I + H)` row-major, the head is `C x H`.

use serde::{Deserialize, Serialize};

use crate::aggregation::{Classes, Pipeline};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, Params, TemporalModel};

pub const FORMAT: &str = "sbt-model-v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TemporalModel,
    pub classes: Classes,
    pub pipeline: Pipeline,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format: String,
    config: ModelConfig,
    classes: Classes,
    pipeline: Pipeline,
    params: NamedParams,
}

#[derive(Serialize, Deserialize)]
struct NamedParams {
    w_input: Vec<f64>,
    w_forget: Vec<f64>,
    w_output: Vec<f64>,
    w_candidate: Vec<f64>,
    b_input: Vec<f64>,
    b_forget: Vec<f64>,
    b_output: Vec<f64>,
    b_candidate: Vec<f64>,
    w_head: Vec<f64>,
    b_head: Vec<f64>,
}

impl Checkpoint {
    pub fn new(model: TemporalModel, classes: Classes, pipeline: Pipeline) -> Result<Self> {
        if classes.len() != model.config().num_classes {
            return Err(Error::Checkpoint(format!(
                "{} class names for a {}-class model",
                classes.len(),
                model.config().num_classes
            )));
        }
        Ok(Self {
            model,
            classes,
            pipeline,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let p = self.model.params();
        let wlen = p.gates_w.len() / 4;
        let blen = p.gates_b.len() / 4;
        let w = |g: usize| p.gates_w[g * wlen..(g + 1) * wlen].to_vec();
        let b = |g: usize| p.gates_b[g * blen..(g + 1) * blen].to_vec();
        let doc = Document {
            format: FORMAT.into(),
            config: *self.model.config(),
            classes: self.classes.clone(),
            pipeline: self.pipeline.clone(),
            params: NamedParams {
                w_input: w(0),
                w_forget: w(1),
                w_output: w(2),
                w_candidate: w(3),
                b_input: b(0),
                b_forget: b(1),
                b_output: b(2),
                b_candidate: b(3),
                w_head: p.head_w.clone(),
                b_head: p.head_b.clone(),
            },
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses and validates every array against the declared config.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(s)?;
        if doc.format != FORMAT {
            return Err(Error::Checkpoint(format!(
                "unsupported format `{}`, expected `{FORMAT}`",
                doc.format
            )));
        }
        let cfg = doc.config;
        cfg.validate()?;
        let h = cfg.hidden_dim;
        let n = cfg.input_dim + h;
        let np = doc.params;
        let check = |name: &str, v: &[f64], want: usize| -> Result<()> {
            if v.len() != want {
                return Err(Error::Checkpoint(format!(
                    "`{name}` has {} values, config requires {want}",
                    v.len()
                )));
            }
            Ok(())
        };
        for (name, v) in [
            ("w_input", &np.w_input),
            ("w_forget", &np.w_forget),
            ("w_output", &np.w_output),
            ("w_candidate", &np.w_candidate),
        ] {
            check(name, v, h * n)?;
        }
        for (name, v) in [
            ("b_input", &np.b_input),
            ("b_forget", &np.b_forget),
            ("b_output", &np.b_output),
            ("b_candidate", &np.b_candidate),
        ] {
            check(name, v, h)?;
        }
        check("w_head", &np.w_head, cfg.num_classes * h)?;
        check("b_head", &np.b_head, cfg.num_classes)?;

        let params = Params {
            gates_w: [np.w_input, np.w_forget, np.w_output, np.w_candidate].concat(),
            gates_b: [np.b_input, np.b_forget, np.b_output, np.b_candidate].concat(),
            head_w: np.w_head,
            head_b: np.b_head,
        };
        let model = TemporalModel::from_params(cfg, params)?;
        Self::new(model, doc.classes, doc.pipeline)
    }
}
