use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::BowVector;
use crate::error::{Error, Result};

/// Dense parameter block. Also used for gradients and optimizer moments.
///
/// `w1` is `vocab_size x hidden` and `w2` is `hidden x n_outputs`, both
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Params {
    pub fn zeros(vocab_size: usize, hidden: usize, n_outputs: usize) -> Self {
        Self {
            w1: vec![0.0; vocab_size * hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden * n_outputs],
            b2: vec![0.0; n_outputs],
        }
    }

    /// The four blocks in serialization order.
    pub fn blocks(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn blocks_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fill(&mut self, value: f64) {
        for b in self.blocks_mut() {
            b.fill(value);
        }
    }

    /// Flat read access across blocks.
    pub fn get(&self, mut index: usize) -> f64 {
        for b in self.blocks() {
            if index < b.len() {
                return b[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat write access across blocks.
    pub fn set(&mut self, mut index: usize, value: f64) {
        for b in self.blocks_mut() {
            if index < b.len() {
                b[index] = value;
                return;
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }

    pub fn l2_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// Rounds every parameter to the nearest `f32`.
    pub(crate) fn snap_to_f32(&mut self) {
        for b in self.blocks_mut() {
            for x in b.iter_mut() {
                *x = *x as f32 as f64;
            }
        }
    }
}

/// One (features, class) pair. The null output is never a target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub features: BowVector,
    pub target: usize,
}

impl TrainingExample {
    pub fn new(features: BowVector, target: usize) -> Self {
        Self { features, target }
    }
}

/// Maps a |V|-dimensional bag of words to a distribution over the classes
/// plus a trailing null class: `softmax(W2' relu(W1' x + b1) + b2)`.
///
/// Parameters are computed in `f64` but always hold values representable
/// as `f32` after initialization and after each training run, so the model
/// file round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerModel {
    vocab_size: usize,
    hidden: usize,
    classes: Vec<String>,
    vocab_hash: String,
    pub(crate) params: Params,
}

/// Per-example intermediate values kept for backpropagation.
pub(crate) struct Activations {
    pub input: Vec<(usize, f64)>,
    pub hidden_pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ScorerModel {
    /// Fan-in scaled uniform initialization, `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`
    /// for both weight matrices; zero biases.
    pub fn init(vocab_size: usize, classes: Vec<String>, hidden: usize, seed: u64) -> Result<Self> {
        if vocab_size == 0 {
            return Err(Error::InvalidConfig(
                "vocabulary size must be at least 1".into(),
            ));
        }
        if classes.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                classes.len()
            )));
        }
        if hidden == 0 {
            return Err(Error::InvalidConfig(
                "hidden width must be at least 1".into(),
            ));
        }
        let n_outputs = classes.len() + 1;
        let mut params = Params::zeros(vocab_size, hidden, n_outputs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound1 = 1.0 / (vocab_size as f64).sqrt();
        for w in params.w1.iter_mut() {
            *w = rng.gen_range(-bound1..bound1);
        }
        let bound2 = 1.0 / (hidden as f64).sqrt();
        for w in params.w2.iter_mut() {
            *w = rng.gen_range(-bound2..bound2);
        }
        params.snap_to_f32();
        Ok(Self {
            vocab_size,
            hidden,
            classes,
            vocab_hash: String::new(),
            params,
        })
    }

    pub(crate) fn from_parts(
        vocab_size: usize,
        hidden: usize,
        classes: Vec<String>,
        vocab_hash: String,
        params: Params,
    ) -> Self {
        Self {
            vocab_size,
            hidden,
            classes,
            vocab_hash,
            params,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// |C| + 1.
    pub fn n_outputs(&self) -> usize {
        self.classes.len() + 1
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    /// Output index of the null class, always the last one.
    pub fn null_index(&self) -> usize {
        self.classes.len()
    }

    /// Class name for an output index; `None` for the null class.
    pub fn label_name(&self, index: usize) -> Option<&str> {
        self.classes.get(index).map(String::as_str)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    /// Content hash of the vocabulary this model was trained against; empty if unset.
    pub fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    pub fn set_vocab_hash(&mut self, hash: impl Into<String>) {
        self.vocab_hash = hash.into();
    }

    fn check_input(&self, x: &BowVector) -> Result<()> {
        if x.dim() != self.vocab_size {
            return Err(Error::DimensionMismatch {
                expected: self.vocab_size,
                got: x.dim(),
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("input features"));
        }
        Ok(())
    }

    /// Evaluation-mode class probabilities (no dropout).
    pub fn forward(&self, x: &BowVector) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x.iter().collect()).probs)
    }

    /// Training-mode forward pass: each input entry is dropped with
    /// probability `dropout` and survivors are scaled by `1 / (1 - dropout)`.
    pub fn forward_train<R: Rng>(
        &self,
        x: &BowVector,
        dropout: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.activations(drop_inputs(x, dropout, rng)).probs)
    }

    /// Output probabilities from a precomputed first-layer pre-activation.
    pub(crate) fn output_from_hidden_pre(&self, hidden_pre: &[f64]) -> Vec<f64> {
        let hidden: Vec<f64> = hidden_pre.iter().map(|&z| z.max(0.0)).collect();
        self.output(&hidden)
    }

    pub(crate) fn w1_row(&self, token: usize) -> &[f64] {
        &self.params.w1[token * self.hidden..(token + 1) * self.hidden]
    }

    pub(crate) fn b1(&self) -> &[f64] {
        &self.params.b1
    }

    fn output(&self, hidden: &[f64]) -> Vec<f64> {
        let n_out = self.n_outputs();
        let mut logits = self.params.b2.clone();
        for (k, &h) in hidden.iter().enumerate() {
            if h == 0.0 {
                continue;
            }
            let row = &self.params.w2[k * n_out..(k + 1) * n_out];
            for (l, w) in logits.iter_mut().zip(row) {
                *l += h * w;
            }
        }
        softmax(&mut logits);
        logits
    }

    pub(crate) fn activations(&self, input: Vec<(usize, f64)>) -> Activations {
        let mut hidden_pre = self.params.b1.clone();
        for &(i, v) in &input {
            for (z, w) in hidden_pre.iter_mut().zip(self.w1_row(i)) {
                *z += v * w;
            }
        }
        let hidden: Vec<f64> = hidden_pre.iter().map(|&z| z.max(0.0)).collect();
        let probs = self.output(&hidden);
        Activations {
            input,
            hidden_pre,
            hidden,
            probs,
        }
    }

    /// Mean cross-entropy over `batch` and its exact gradient for the
    /// sampled dropout masks.
    pub fn loss_and_grads<R: Rng>(
        &self,
        batch: &[TrainingExample],
        dropout: f64,
        rng: &mut R,
    ) -> Result<(f64, Params)> {
        let mut grads = Params::zeros(self.vocab_size, self.hidden, self.n_outputs());
        let loss = self.accumulate_grads(batch, dropout, rng, &mut grads)?;
        Ok((loss, grads))
    }

    /// Like [`loss_and_grads`](Self::loss_and_grads) but writes into `grads`,
    /// which is zeroed first.
    pub(crate) fn accumulate_grads<R: Rng>(
        &self,
        batch: &[TrainingExample],
        dropout: f64,
        rng: &mut R,
        grads: &mut Params,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let n_out = self.n_outputs();
        for ex in batch {
            if ex.target == self.null_index() {
                return Err(Error::NullTarget);
            }
            if ex.target > self.null_index() {
                return Err(Error::TargetOutOfRange {
                    target: ex.target,
                    n_outputs: n_out,
                });
            }
            self.check_input(&ex.features)?;
        }
        grads.fill(0.0);
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for ex in batch {
            let input = if dropout > 0.0 {
                drop_inputs(&ex.features, dropout, rng)
            } else {
                ex.features.iter().collect()
            };
            let act = self.activations(input);
            loss -= act.probs[ex.target].max(f64::MIN_POSITIVE).ln();

            let mut d_logits = act.probs;
            d_logits[ex.target] -= 1.0;
            for d in d_logits.iter_mut() {
                *d *= scale;
            }
            for (g, d) in grads.b2.iter_mut().zip(&d_logits) {
                *g += d;
            }
            let mut d_hidden = vec![0.0; self.hidden];
            for k in 0..self.hidden {
                let row = &self.params.w2[k * n_out..(k + 1) * n_out];
                let h = act.hidden[k];
                let grow = &mut grads.w2[k * n_out..(k + 1) * n_out];
                let mut acc = 0.0;
                for c in 0..n_out {
                    grow[c] += h * d_logits[c];
                    acc += row[c] * d_logits[c];
                }
                d_hidden[k] = if act.hidden_pre[k] > 0.0 { acc } else { 0.0 };
            }
            for (g, d) in grads.b1.iter_mut().zip(&d_hidden) {
                *g += d;
            }
            for &(i, v) in &act.input {
                let grow = &mut grads.w1[i * self.hidden..(i + 1) * self.hidden];
                for (g, d) in grow.iter_mut().zip(&d_hidden) {
                    *g += v * d;
                }
            }
        }
        Ok(loss * scale)
    }
}

fn drop_inputs<R: Rng>(x: &BowVector, dropout: f64, rng: &mut R) -> Vec<(usize, f64)> {
    if dropout <= 0.0 {
        return x.iter().collect();
    }
    let keep = 1.0 - dropout;
    x.iter()
        .filter(|_| rng.gen::<f64>() < keep)
        .map(|(i, v)| (i, v / keep))
        .collect()
}

pub(crate) fn softmax(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}
