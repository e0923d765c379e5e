use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Params, ScorerModel, TrainingExample};
use crate::error::{Error, Result};

/// Optimization settings. Defaults follow the published setup: 512 hidden
/// units, input dropout 0.5, 100 epochs, learning rate 1e-3 for initial
/// training and 1e-4 for fine-tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    /// Probability of dropping each input entry during training.
    pub dropout: f64,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_finetune: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 512,
            dropout: 0.5,
            epochs: 100,
            lr_initial: 1e-3,
            lr_finetune: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 64,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    /// Returns every violated constraint.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(0.0..1.0).contains(&self.dropout) {
            out.push(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.lr_initial > 0.0 && self.lr_initial.is_finite()) {
            out.push(format!("lr_initial must be > 0, got {}", self.lr_initial));
        }
        if !(self.lr_finetune > 0.0 && self.lr_finetune.is_finite()) {
            out.push(format!("lr_finetune must be > 0, got {}", self.lr_finetune));
        }
        if self.hidden == 0 {
            out.push("hidden must be at least 1".into());
        }
        if self.batch_size == 0 {
            out.push("batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            out.push("adam betas must be in [0, 1)".into());
        }
        if !(self.adam_eps > 0.0) {
            out.push("adam_eps must be > 0".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean training loss per epoch, with dropout active.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: ScorerModel,
    pub report: TrainReport,
}

struct Adam {
    m: Params,
    v: Params,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(model: &ScorerModel, cfg: &TrainConfig) -> Self {
        let zeros = Params::zeros(model.vocab_size(), model.hidden(), model.n_outputs());
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    fn step(&mut self, params: &mut Params, grads: &Params, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let blocks = params
            .blocks_mut()
            .into_iter()
            .zip(grads.blocks())
            .zip(self.m.blocks_mut())
            .zip(self.v.blocks_mut());
        for (((p, g), m), v) in blocks {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Runs `cfg.epochs` passes of mini-batch ADAM at learning rate `lr`,
/// shuffling examples each epoch with a generator seeded by `cfg.rng_seed`.
pub fn train(
    mut model: ScorerModel,
    data: &[TrainingExample],
    cfg: &TrainConfig,
    lr: f64,
) -> Result<Trained> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("empty training set".into()));
    }
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be >= 0, got {lr}"
        )));
    }
    cfg.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut adam = Adam::new(&model, cfg);
    let mut grads = Params::zeros(model.vocab_size(), model.hidden(), model.n_outputs());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut report = TrainReport::default();
    let mut batch = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let loss = model.accumulate_grads(&batch, cfg.dropout, &mut rng, &mut grads)?;
            total += loss * batch.len() as f64;
            adam.step(&mut model.params, &grads, lr);
            report.steps += 1;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || !model.params.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        debug!("epoch {epoch}: loss {mean:.6}");
        report.epoch_losses.push(mean);
    }
    model.params.snap_to_f32();
    Ok(Trained { model, report })
}

/// [`train`] at `cfg.lr_finetune`. An empty example set leaves the model
/// untouched.
pub fn fine_tune(
    model: ScorerModel,
    data: &[TrainingExample],
    cfg: &TrainConfig,
) -> Result<Trained> {
    if data.is_empty() {
        warn!("fine-tune called with no examples; model unchanged");
        return Ok(Trained {
            model,
            report: TrainReport::default(),
        });
    }
    train(model, data, cfg, cfg.lr_finetune)
}
