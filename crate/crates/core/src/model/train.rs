use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::engine::{loss_and_gradients, Example};
use super::history::HistoryTable;
use super::TemporalModel;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Let gradients flow into the embedding table.
    pub finetune_embeddings: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            finetune_embeddings: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1), got {b}"
                )));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        Ok(())
    }
}

/// Adam state for one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// Advances the step counter; call once per batch before [`Adam::update`].
    pub fn tick(&mut self) {
        self.step += 1;
    }

    /// Bias-corrected update of `params[offset..]` with `grad`.
    pub fn update(&mut self, offset: usize, params: &mut [f64], grad: &[f64]) {
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (k, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
            let m = &mut self.m[offset + k];
            let v = &mut self.v[offset + k];
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Mean training loss of each epoch.
    pub epoch_loss: Vec<f64>,
}

/// Minibatch Adam on the mean cross-entropy. Examples are reshuffled every
/// epoch from a seed-derived stream. With `finetune_embeddings` the
/// observed rows of `table` are updated as well.
pub fn train(
    model: &mut TemporalModel,
    table: &mut HistoryTable,
    examples: &[Example],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::invalid("no training examples"));
    }
    let mut adam = Adam::new(model.parameter_count(), cfg);
    let mut table_adam = cfg
        .finetune_embeddings
        .then(|| Adam::new(table.data.len(), cfg));
    let row_len = table.steps() * table.dim();
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(cfg.seed, "train.shuffle", epoch as u64));
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<Example> = idx.iter().map(|&i| examples[i]).collect();
            let (loss, grads) = loss_and_gradients(model, table, &batch, cfg.finetune_embeddings)?;
            total += loss * batch.len() as f64;

            adam.tick();
            let mut offset = 0;
            for (p, (_, g)) in model.tensors_mut().into_iter().zip(grads.model.tensors()) {
                adam.update(offset, p, g);
                offset += g.len();
            }
            if let (Some(opt), Some(rows)) = (table_adam.as_mut(), grads.embeddings) {
                opt.tick();
                for (node, g) in rows {
                    let mask = table.mask_of(node).to_vec();
                    let dst = table.rows_of_mut(node);
                    let base = node as usize * row_len;
                    let d = g.len() / mask.len();
                    for (t, &seen) in mask.iter().enumerate() {
                        if seen {
                            let span = t * d..(t + 1) * d;
                            opt.update(base + span.start, &mut dst[span.clone()], &g[span]);
                        }
                    }
                }
            }
        }
        let mean = total / examples.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        log::debug!("epoch {epoch}: loss {mean:.6}");
        epoch_loss.push(mean);
    }
    Ok(TrainOutcome { epoch_loss })
}
