use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{split, Pair};
use crate::error::{Error, Result};

use super::model::{init_model_with, Arch, ModelWeights, INPUT, OUTPUT};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub arch: Arch,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Share of pairs used for training; the rest is validation.
    pub split_fraction: f64,
    pub split_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            arch: Arch::default(),
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 200,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            split_fraction: 0.9,
            split_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        let bad = |m: &str| Err(Error::Contract(m.into()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size < 2 {
            return bad("batch size must be at least 2");
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad("split fraction must lie in (0,1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment coefficients must lie in [0,1)");
        }
        Ok(())
    }
}

/// Adam state bound to one model.
pub struct Trainer {
    config: TrainConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
    dropout_rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(weights: &mut ModelWeights, config: &TrainConfig) -> Self {
        let zeros: Vec<Vec<f64>> = weights.params_mut().iter().map(|p| vec![0.0; p.len()]).collect();
        Trainer {
            config: config.clone(),
            m: zeros.clone(),
            v: zeros,
            step: 0,
            dropout_rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1)),
        }
    }

    /// One optimizer update on a batch of standardized targets. Returns the batch loss.
    pub fn step(&mut self, weights: &mut ModelWeights, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
        let seed = self.dropout_rng.random::<u64>();
        let (loss, grads, stats) = weights.loss_grad_stats(x, y, seed)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "non-finite loss {loss} at step {} (batch of {})",
                self.step + 1,
                x.nrows()
            )));
        }
        self.step += 1;
        let c = &self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step);
        let bc2 = 1.0 - c.beta2.powi(self.step);
        for (((p, g), m), v) in weights
            .params_mut()
            .into_iter()
            .zip(&grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
                p[i] -= c.learning_rate * (m[i] / bc1) / ((v[i] / bc2).sqrt() + c.adam_eps);
            }
        }
        weights.update_running_stats(&stats);
        Ok(loss)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    /// Mean standardized batch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation MSE per epoch in coefficient units.
    pub val_mse: Vec<f64>,
    pub best_epoch: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub weights: ModelWeights,
    pub best: ModelWeights,
    pub history: TrainHistory,
}

pub(crate) fn stack(pairs: &[&Pair]) -> (Array2<f64>, Array2<f64>) {
    let mut x = Array2::zeros((pairs.len(), INPUT));
    let mut y = Array2::zeros((pairs.len(), OUTPUT));
    for (i, (m, t)) in pairs.iter().enumerate() {
        x.row_mut(i).assign(&ndarray::ArrayView1::from(&m.0[..]));
        y.row_mut(i).assign(&ndarray::ArrayView1::from(&t[..]));
    }
    (x, y)
}

/// Stacks pairs into `(inputs, targets)` matrices.
pub fn pairs_to_arrays(pairs: &[Pair]) -> (Array2<f64>, Array2<f64>) {
    stack(&pairs.iter().collect::<Vec<_>>())
}

/// Mean squared error of eval-mode predictions in coefficient units.
pub fn mse(weights: &ModelWeights, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    let p = weights.predict(x)?;
    Ok((&p - &y).mapv(|d| d * d).mean().unwrap_or(f64::NAN))
}

pub fn train(pairs: &[Pair], config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(pairs, config, |_, _, _| {})
}

/// Like [`train`], calling `progress(epoch, train_loss, val_mse)` after each epoch.
pub fn train_with_progress(
    pairs: &[Pair],
    config: &TrainConfig,
    mut progress: impl FnMut(usize, f64, f64),
) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::Validation(vec!["cannot train on an empty dataset".into()]));
    }
    let refs: Vec<&Pair> = pairs.iter().collect();
    let (train_set, val_set) = split(&refs, config.split_fraction, config.split_seed);
    if train_set.len() < 2 || val_set.is_empty() {
        return Err(Error::Validation(vec![format!(
            "{} pairs are too few to split into training and validation sets",
            pairs.len()
        )]));
    }
    let (tx, ty) = stack(&train_set);
    let (vx, vy) = stack(&val_set);

    let mut weights = init_model_with(&config.arch, config.seed)?;
    let mean = ty.mean_axis(Axis(0)).expect("non-empty");
    let std = ty.std_axis(Axis(0), 0.0);
    weights.target_mean = mean.to_vec();
    weights.target_std = std.iter().map(|&s| if s < 1e-12 { 1.0 } else { s }).collect();
    weights.train = Some(config.clone());
    let ty = weights.standardize(ty.view());

    let mut trainer = Trainer::new(&mut weights, config);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut order: Vec<usize> = (0..tx.nrows()).collect();
    let mut history = TrainHistory::default();
    let mut best = weights.clone();
    let mut best_mse = f64::INFINITY;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let bx = tx.select(Axis(0), chunk);
            let by = ty.select(Axis(0), chunk);
            total += trainer.step(&mut weights, bx.view(), by.view())?;
            batches += 1;
        }
        let loss = total / batches.max(1) as f64;
        let val = mse(&weights, vx.view(), vy.view())?;
        history.train_loss.push(loss);
        history.val_mse.push(val);
        if val < best_mse {
            best_mse = val;
            best = weights.clone();
            history.best_epoch = epoch;
        }
        progress(epoch, loss, val);
    }
    weights.quantize();
    best.quantize();
    Ok(TrainOutcome { weights, best, history })
}
