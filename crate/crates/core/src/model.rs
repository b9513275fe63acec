//! Single-layer LSTM classifier over fixed-length windows.
//!
//! Per frame `x_t`, with `xh = [x_t; h_{t-1}]`:
//!
//! ```text
//! i = sigmoid(W_i xh + b_i)    f = sigmoid(W_f xh + b_f)
//! o = sigmoid(W_o xh + b_o)    g = tanh(W_g xh + b_g)
//! c_t = f * c_{t-1} + i * g    h_t = o * tanh(c_t)
//! ```
//!
//! The state starts at zero, and the class distribution is
//! `softmax(V h_T + c)` over the final hidden state. Gradients come from
//! backpropagation through time over every frame of the window; training is
//! minibatch SGD with global-norm gradient clipping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::FeatureVector;
use crate::windowing::Window;

/// Gate blocks are stacked in this order inside the gate matrix.
pub const GATES: [&str; 4] = ["input", "forget", "output", "candidate"];
const FORGET: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub const DEFAULT_HIDDEN: usize = 32;

    pub fn new(input_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: Self::DEFAULT_HIDDEN,
            num_classes,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "input_dim ({}) and hidden_dim ({}) must be >= 1",
                self.input_dim, self.hidden_dim
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "num_classes must be >= 2, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    fn concat_dim(&self) -> usize {
        self.input_dim + self.hidden_dim
    }
}

/// Every trainable tensor, flat and row-major. Also used for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// `4H x (I + H)`, gate blocks in [`GATES`] order.
    pub gates_w: Vec<f64>,
    /// `4H`.
    pub gates_b: Vec<f64>,
    /// `C x H`.
    pub head_w: Vec<f64>,
    /// `C`.
    pub head_b: Vec<f64>,
}

impl Params {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let h = cfg.hidden_dim;
        Self {
            gates_w: vec![0.0; 4 * h * cfg.concat_dim()],
            gates_b: vec![0.0; 4 * h],
            head_w: vec![0.0; cfg.num_classes * h],
            head_b: vec![0.0; cfg.num_classes],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [&self.gates_w, &self.gates_b, &self.head_w, &self.head_b]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [
            &mut self.gates_w,
            &mut self.gates_b,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors().into_iter().flat_map(|t| t.iter().copied())
    }

    pub fn get(&self, mut idx: usize) -> f64 {
        for t in self.tensors() {
            if idx < t.len() {
                return t[idx];
            }
            idx -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set(&mut self, mut idx: usize, v: f64) {
        for t in self.tensors_mut() {
            if idx < t.len() {
                t[idx] = v;
                return;
            }
            idx -= t.len();
        }
        panic!("parameter index out of range");
    }

    pub fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }

    /// `self += k * other`.
    pub fn add_scaled(&mut self, k: f64, other: &Params) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(dst, k, src);
        }
    }
}

/// Softmax output of the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub probs: Vec<f64>,
}

impl ClassDistribution {
    /// Most probable class; ties go to the smallest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = k;
            }
        }
        best
    }

    pub fn max_prob(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalModel {
    config: ModelConfig,
    params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.2,
            batch_size: 32,
            seed: 0,
            clip_norm: 5.0,
        }
    }
}

impl TemporalModel {
    /// Seeded uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`; biases
    /// start at zero except the forget gate, which starts at one.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = Params::zeros(&config);
        let h = config.hidden_dim;

        let k = 1.0 / (config.concat_dim() as f64).sqrt();
        params
            .gates_w
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-k..=k));
        params.gates_b[FORGET * h..(FORGET + 1) * h].fill(1.0);

        let k = 1.0 / (h as f64).sqrt();
        params
            .head_w
            .iter_mut()
            .for_each(|w| *w = rng.gen_range(-k..=k));

        Ok(Self { config, params })
    }

    /// Builds a model from explicit parameters, checking every shape.
    pub fn from_params(config: ModelConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let expect = Params::zeros(&config);
        for (name, (got, want)) in ["gates_w", "gates_b", "head_w", "head_b"]
            .into_iter()
            .zip(params.tensors().into_iter().zip(expect.tensors()))
        {
            if got.len() != want.len() {
                return Err(Error::Shape {
                    what: name,
                    expected: want.len(),
                    actual: got.len(),
                });
            }
        }
        if !params.is_finite() {
            return Err(Error::InvalidConfig("non-finite parameter".into()));
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn forward(&self, window: &Window) -> Result<ClassDistribution> {
        self.forward_frames(&window.frames)
    }

    /// Runs the recurrence over any non-empty frame sequence.
    pub fn forward_frames(&self, frames: &[FeatureVector]) -> Result<ClassDistribution> {
        self.check_frames(frames)?;
        let mut cache = Cache::default();
        let logits = self.run(frames, &mut cache);
        Ok(ClassDistribution {
            probs: softmax(&logits),
        })
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_gradients(&self, batch: &[(Window, usize)]) -> Result<(f64, Params)> {
        let items: Vec<(&[FeatureVector], usize)> = batch
            .iter()
            .map(|(w, y)| (w.frames.as_slice(), *y))
            .collect();
        self.batch_gradients(&items)
    }

    fn batch_gradients(&self, batch: &[(&[FeatureVector], usize)]) -> Result<(f64, Params)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        for (frames, y) in batch {
            self.check_frames(frames)?;
            if *y >= self.config.num_classes {
                return Err(Error::Label {
                    label: *y,
                    num_classes: self.config.num_classes,
                });
            }
        }
        let mut grads = Params::zeros(&self.config);
        let mut cache = Cache::default();
        let mut scratch = Scratch::new(&self.config);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (frames, y) in batch {
            loss += self.backprop(frames, *y, scale, &mut grads, &mut cache, &mut scratch);
        }
        Ok((loss * scale, grads))
    }

    fn check_frames(&self, frames: &[FeatureVector]) -> Result<()> {
        if frames.is_empty() {
            return Err(Error::Empty("window"));
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != self.config.input_dim) {
            return Err(Error::Shape {
                what: "frame features",
                expected: self.config.input_dim,
                actual: bad.len(),
            });
        }
        Ok(())
    }

    /// Forward pass storing per-step activations; returns the logits.
    fn run(&self, frames: &[FeatureVector], cache: &mut Cache) -> Vec<f64> {
        let (i_dim, h) = (self.config.input_dim, self.config.hidden_dim);
        let n = self.config.concat_dim();
        let steps = frames.len();
        cache.reset(steps, n, h);

        let mut z = vec![0.0; 4 * h];
        for (t, frame) in frames.iter().enumerate() {
            let xh = &mut cache.xh[t * n..(t + 1) * n];
            xh[..i_dim].copy_from_slice(frame.as_slice());
            if t == 0 {
                xh[i_dim..].fill(0.0);
            } else {
                xh[i_dim..].copy_from_slice(&cache.h[(t - 1) * h..t * h]);
            }

            for (r, zr) in z.iter_mut().enumerate() {
                *zr = dot(&self.params.gates_w[r * n..(r + 1) * n], xh) + self.params.gates_b[r];
            }

            let act = &mut cache.act[t * 4 * h..(t + 1) * 4 * h];
            for r in 0..3 * h {
                act[r] = sigmoid(z[r]);
            }
            for r in 3 * h..4 * h {
                act[r] = z[r].tanh();
            }

            for j in 0..h {
                let c_prev = if t == 0 { 0.0 } else { cache.c[(t - 1) * h + j] };
                let (ig, fg, og, gg) = (act[j], act[h + j], act[2 * h + j], act[3 * h + j]);
                let c = fg * c_prev + ig * gg;
                let tc = c.tanh();
                cache.c[t * h + j] = c;
                cache.tanh_c[t * h + j] = tc;
                cache.h[t * h + j] = og * tc;
            }
        }

        let h_last = &cache.h[(steps - 1) * h..steps * h];
        (0..self.config.num_classes)
            .map(|k| dot(&self.params.head_w[k * h..(k + 1) * h], h_last) + self.params.head_b[k])
            .collect()
    }

    /// Accumulates `scale * dloss/dparams` for one example into `grads` and
    /// returns its unscaled loss.
    fn backprop(
        &self,
        frames: &[FeatureVector],
        label: usize,
        scale: f64,
        grads: &mut Params,
        cache: &mut Cache,
        s: &mut Scratch,
    ) -> f64 {
        let logits = self.run(frames, cache);
        let (i_dim, h) = (self.config.input_dim, self.config.hidden_dim);
        let n = self.config.concat_dim();
        let steps = frames.len();

        let loss = log_sum_exp(&logits) - logits[label];
        let mut dlogits = softmax(&logits);
        dlogits[label] -= 1.0;
        dlogits.iter_mut().for_each(|d| *d *= scale);

        let h_last = &cache.h[(steps - 1) * h..steps * h];
        s.dh.fill(0.0);
        for (k, &dk) in dlogits.iter().enumerate() {
            axpy(&mut grads.head_w[k * h..(k + 1) * h], dk, h_last);
            grads.head_b[k] += dk;
            axpy(&mut s.dh, dk, &self.params.head_w[k * h..(k + 1) * h]);
        }

        s.dc.fill(0.0);
        for t in (0..steps).rev() {
            let act = &cache.act[t * 4 * h..(t + 1) * 4 * h];
            for j in 0..h {
                let (ig, fg, og, gg) = (act[j], act[h + j], act[2 * h + j], act[3 * h + j]);
                let tc = cache.tanh_c[t * h + j];
                let c_prev = if t == 0 { 0.0 } else { cache.c[(t - 1) * h + j] };
                let dh = s.dh[j];
                let dc = s.dc[j] + dh * og * (1.0 - tc * tc);
                s.dz[j] = dc * gg * ig * (1.0 - ig);
                s.dz[h + j] = dc * c_prev * fg * (1.0 - fg);
                s.dz[2 * h + j] = dh * tc * og * (1.0 - og);
                s.dz[3 * h + j] = dc * ig * (1.0 - gg * gg);
                s.dc[j] = dc * fg;
            }

            let xh = &cache.xh[t * n..(t + 1) * n];
            s.dxh.fill(0.0);
            for (r, &dzr) in s.dz.iter().enumerate() {
                if dzr == 0.0 {
                    continue;
                }
                axpy(&mut grads.gates_w[r * n..(r + 1) * n], dzr, xh);
                grads.gates_b[r] += dzr;
                axpy(&mut s.dxh, dzr, &self.params.gates_w[r * n..(r + 1) * n]);
            }
            s.dh.copy_from_slice(&s.dxh[i_dim..]);
        }
        loss
    }
}

/// Trains with shuffled minibatch SGD and gradient-norm clipping.
///
/// Returns the trained model and the mean training loss of each epoch,
/// measured on the parameters each batch saw.
pub fn train(
    model: &TemporalModel,
    dataset: &[(Window, usize)],
    opts: &TrainOptions,
) -> Result<(TemporalModel, Vec<f64>)> {
    let items: Vec<(&[FeatureVector], usize)> = dataset
        .iter()
        .map(|(w, y)| (w.frames.as_slice(), *y))
        .collect();
    train_sequences(model, &items, opts)
}

/// Same as [`train`] over borrowed frame sequences of any length.
pub fn train_sequences(
    model: &TemporalModel,
    dataset: &[(&[FeatureVector], usize)],
    opts: &TrainOptions,
) -> Result<(TemporalModel, Vec<f64>)> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    if opts.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
    }
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(opts.epochs);
    let mut batch = Vec::with_capacity(opts.batch_size);

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(opts.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| dataset[i]));
            let (loss, mut grads) = model.batch_gradients(&batch)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            total += loss * chunk.len() as f64;

            let norm = grads.norm();
            if norm > opts.clip_norm {
                grads.scale(opts.clip_norm / norm);
            }
            model.params.add_scaled(-opts.learning_rate, &grads);
            if !model.params.is_finite() {
                return Err(Error::Divergence { epoch });
            }
        }
        history.push(total / dataset.len() as f64);
    }
    Ok((model, history))
}

#[derive(Default)]
struct Cache {
    xh: Vec<f64>,
    act: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

impl Cache {
    fn reset(&mut self, steps: usize, n: usize, h: usize) {
        self.xh.resize(steps * n, 0.0);
        self.act.resize(steps * 4 * h, 0.0);
        self.c.resize(steps * h, 0.0);
        self.tanh_c.resize(steps * h, 0.0);
        self.h.resize(steps * h, 0.0);
    }
}

struct Scratch {
    dh: Vec<f64>,
    dc: Vec<f64>,
    dz: Vec<f64>,
    dxh: Vec<f64>,
}

impl Scratch {
    fn new(cfg: &ModelConfig) -> Self {
        let h = cfg.hidden_dim;
        Self {
            dh: vec![0.0; h],
            dc: vec![0.0; h],
            dz: vec![0.0; 4 * h],
            dxh: vec![0.0; cfg.concat_dim()],
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

// Four independent accumulators so the loop vectorizes; the summation order
// is fixed, which keeps results bit-reproducible.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn axpy(dst: &mut [f64], k: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += k * s;
    }
}
