use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::prt_oracle::TransferMeta;

use super::TrainConfig;

pub const INPUT: usize = 32;
pub const OUTPUT: usize = 27;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
/// Lower bound kept on running variances.
pub const VAR_FLOOR: f64 = 1e-12;

/// Layer widths and hidden-layer dropout rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Arch {
    pub dims: Vec<usize>,
    pub dropout: Vec<f64>,
}

impl Default for Arch {
    fn default() -> Self {
        Arch {
            dims: vec![INPUT, 1024, 512, 256, 128, OUTPUT],
            dropout: vec![0.3, 0.2, 0.1, 0.05],
        }
    }
}

impl Arch {
    pub fn hidden_layers(&self) -> usize {
        self.dims.len() - 2
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dims;
        if d.len() < 3 || d[0] != INPUT || d[d.len() - 1] != OUTPUT || d.contains(&0) {
            return Err(Error::Contract(format!(
                "architecture must run {INPUT} → hidden… → {OUTPUT}, got {d:?}"
            )));
        }
        if self.dropout.len() != self.hidden_layers() {
            return Err(Error::Contract("one dropout rate per hidden layer".into()));
        }
        if self.dropout.iter().any(|p| !(0.0..1.0).contains(p)) || self.dropout.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Contract(format!(
                "dropout rates must lie in [0,1) and not increase, got {:?}",
                self.dropout
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `out × in`, row-major.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl BatchNorm {
    fn new(n: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(n),
            beta: Array1::zeros(n),
            mean: Array1::zeros(n),
            var: Array1::ones(n),
        }
    }

    fn eval(&self, x: &Array2<f64>) -> Array2<f64> {
        let scale = &self.gamma / &self.var.mapv(|v| (v + BN_EPS).sqrt());
        (x - &self.mean) * &scale + &self.beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hidden {
    pub linear: Linear,
    pub bn: BatchNorm,
}

/// Batch mean and unbiased variance of one batch-norm stage.
pub(crate) type BatchStats = (Array1<f64>, Array1<f64>);

/// All parameters, running statistics and target normalization of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub arch: Arch,
    pub input_bn: BatchNorm,
    pub hidden: Vec<Hidden>,
    pub output: Linear,
    /// Per-coefficient statistics used to standardize targets.
    pub target_mean: Vec<f64>,
    pub target_std: Vec<f64>,
    pub init_seed: u64,
    pub train: Option<TrainConfig>,
    /// Oracle settings of the data the model was trained on.
    pub sampling: Option<TransferMeta>,
}

/// He-initialized model with the default architecture.
pub fn init_model(seed: u64) -> ModelWeights {
    init_model_with(&Arch::default(), seed).expect("default architecture is valid")
}

pub fn init_model_with(arch: &Arch, seed: u64) -> Result<ModelWeights> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut linear = |fan_in: usize, fan_out: usize| {
        let dist = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
        Linear {
            weight: Array2::from_shape_fn((fan_out, fan_in), |_| dist.sample(&mut rng)),
            bias: Array1::zeros(fan_out),
        }
    };
    let d = &arch.dims;
    let hidden = (1..d.len() - 1)
        .map(|l| Hidden {
            linear: linear(d[l - 1], d[l]),
            bn: BatchNorm::new(d[l]),
        })
        .collect();
    let output = linear(d[d.len() - 2], OUTPUT);
    let mut m = ModelWeights {
        arch: arch.clone(),
        input_bn: BatchNorm::new(INPUT),
        hidden,
        output,
        target_mean: vec![0.0; OUTPUT],
        target_std: vec![1.0; OUTPUT],
        init_seed: seed,
        train: None,
        sampling: None,
    };
    m.quantize();
    Ok(m)
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

fn silu_grad(x: f64) -> f64 {
    let s = 1.0 / (1.0 + (-x).exp());
    s * (1.0 + x * (1.0 - s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

struct LayerCache {
    input: Array2<f64>,
    bn: BnCache,
    pre_act: Array2<f64>,
    mask: Option<Array2<f64>>,
}

/// Intermediate values of a training forward pass.
struct Tape {
    input_bn: BnCache,
    layers: Vec<LayerCache>,
    last_hidden: Array2<f64>,
    /// Batch mean and unbiased variance per batch-norm stage, input stage first.
    batch_stats: Vec<BatchStats>,
}

/// Gradients in [`ModelWeights::params_mut`] order.
pub type Gradients = Vec<Vec<f64>>;

fn bn_train(x: &Array2<f64>, bn: &BatchNorm) -> (Array2<f64>, BnCache, BatchStats) {
    let b = x.nrows() as f64;
    let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
    let centered = x - &mean;
    let var = (&centered * &centered).sum_axis(Axis(0)) / b;
    let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
    let xhat = centered * &inv_std;
    let y = &xhat * &bn.gamma + &bn.beta;
    let unbiased = if b > 1.0 { &var * (b / (b - 1.0)) } else { var };
    (y, BnCache { xhat, inv_std }, (mean, unbiased))
}

fn bn_backward(dy: &Array2<f64>, cache: &BnCache, gamma: &Array1<f64>) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let b = dy.nrows() as f64;
    let dbeta = dy.sum_axis(Axis(0));
    let dgamma = (dy * &cache.xhat).sum_axis(Axis(0));
    let dxhat = dy * gamma;
    let s1 = dxhat.sum_axis(Axis(0));
    let s2 = (&dxhat * &cache.xhat).sum_axis(Axis(0));
    let dx = (dxhat * b - &s1 - &cache.xhat * &s2) * &(&cache.inv_std / b);
    (dx, dgamma.to_vec(), dbeta.to_vec())
}

fn affine(x: &Array2<f64>, l: &Linear) -> Array2<f64> {
    x.dot(&l.weight.t()) + &l.bias
}

fn check_input(x: &ArrayView2<f64>, y: Option<&ArrayView2<f64>>) -> Result<()> {
    if x.ncols() != INPUT {
        return Err(Error::Contract(format!(
            "inputs must have {INPUT} columns, got {}",
            x.ncols()
        )));
    }
    if let Some(y) = y {
        if y.dim() != (x.nrows(), OUTPUT) {
            return Err(Error::Contract(format!(
                "targets must be {}×{OUTPUT}, got {:?}",
                x.nrows(),
                y.dim()
            )));
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("inputs contain non-finite values".into()));
    }
    Ok(())
}

impl ModelWeights {
    /// Raw network output (standardized target space).
    pub fn forward(&self, x: ArrayView2<f64>, mode: Mode, dropout_seed: u64) -> Result<Array2<f64>> {
        check_input(&x, None)?;
        Ok(match mode {
            Mode::Eval => self.forward_eval(x),
            Mode::Train => self.forward_train(x, dropout_seed).0,
        })
    }

    fn forward_eval(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = self.input_bn.eval(&x.to_owned());
        for layer in &self.hidden {
            h = layer.bn.eval(&affine(&h, &layer.linear)).mapv_into(silu);
        }
        affine(&h, &self.output)
    }

    fn forward_train(&self, x: ArrayView2<f64>, dropout_seed: u64) -> (Array2<f64>, Tape) {
        let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
        let (mut h, input_bn, stats) = bn_train(&x.to_owned(), &self.input_bn);
        let mut batch_stats = vec![stats];
        let mut layers = Vec::with_capacity(self.hidden.len());
        for (layer, &p) in self.hidden.iter().zip(&self.arch.dropout) {
            let z = affine(&h, &layer.linear);
            let (a, bn, stats) = bn_train(&z, &layer.bn);
            batch_stats.push(stats);
            let mut s = a.mapv(silu);
            let mask = (p > 0.0).then(|| {
                let keep = 1.0 / (1.0 - p);
                Array2::from_shape_fn(s.dim(), |_| if rng.random::<f64>() < p { 0.0 } else { keep })
            });
            if let Some(m) = &mask {
                s *= m;
            }
            layers.push(LayerCache {
                input: h,
                bn,
                pre_act: a,
                mask,
            });
            h = s;
        }
        let out = affine(&h, &self.output);
        (
            out,
            Tape {
                input_bn,
                layers,
                last_hidden: h,
                batch_stats,
            },
        )
    }

    /// Mean squared error over all outputs and its gradient for every
    /// trainable tensor, with batch statistics and fixed dropout masks.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, y: ArrayView2<f64>, dropout_seed: u64) -> Result<(f64, Gradients)> {
        let (loss, grads, _) = self.loss_grad_stats(x, y, dropout_seed)?;
        Ok((loss, grads))
    }

    /// Loss, gradients and the batch statistics seen by each batch-norm stage.
    pub(crate) fn loss_grad_stats(
        &self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
        dropout_seed: u64,
    ) -> Result<(f64, Gradients, Vec<BatchStats>)> {
        check_input(&x, Some(&y))?;
        if x.nrows() < 2 {
            return Err(Error::Contract("training batches need at least 2 rows".into()));
        }
        let (loss, grads, tape) = self.loss_grad_tape(x, y, dropout_seed);
        Ok((loss, grads, tape.batch_stats))
    }

    fn loss_grad_tape(&self, x: ArrayView2<f64>, y: ArrayView2<f64>, dropout_seed: u64) -> (f64, Gradients, Tape) {
        let (out, tape) = self.forward_train(x, dropout_seed);
        let diff = &out - &y;
        let n = diff.len() as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let dout = diff * (2.0 / n);

        let flat = |a: Array2<f64>| a.into_raw_vec_and_offset().0;
        let out_w = flat(dout.t().dot(&tape.last_hidden));
        let out_b = dout.sum_axis(Axis(0)).to_vec();
        let mut dh = dout.dot(&self.output.weight);
        let mut layer_grads = Vec::with_capacity(self.hidden.len());
        for (layer, cache) in self.hidden.iter().zip(&tape.layers).rev() {
            if let Some(m) = &cache.mask {
                dh *= m;
            }
            let da = dh * &cache.pre_act.mapv(silu_grad);
            let (dz, dgamma, dbeta) = bn_backward(&da, &cache.bn, &layer.bn.gamma);
            let dw = flat(dz.t().dot(&cache.input));
            let db = dz.sum_axis(Axis(0)).to_vec();
            dh = dz.dot(&layer.linear.weight);
            layer_grads.push([dw, db, dgamma, dbeta]);
        }
        let (_, dgamma, dbeta) = bn_backward(&dh, &tape.input_bn, &self.input_bn.gamma);
        let mut grads = vec![dgamma, dbeta];
        for g in layer_grads.into_iter().rev() {
            grads.extend(g);
        }
        grads.push(out_w);
        grads.push(out_b);
        (loss, grads, tape)
    }

    /// Trainable tensors as flat slices: input γ, β; per hidden layer W, b, γ, β; output W, b.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        fn s<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        let mut out: Vec<&mut [f64]> = vec![s(&mut self.input_bn.gamma), s(&mut self.input_bn.beta)];
        for h in &mut self.hidden {
            out.push(s(&mut h.linear.weight));
            out.push(s(&mut h.linear.bias));
            out.push(s(&mut h.bn.gamma));
            out.push(s(&mut h.bn.beta));
        }
        out.push(s(&mut self.output.weight));
        out.push(s(&mut self.output.bias));
        out
    }

    /// Names matching [`ModelWeights::params_mut`].
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["input_bn.gamma".to_string(), "input_bn.beta".to_string()];
        for l in 0..self.hidden.len() {
            for t in ["weight", "bias", "gamma", "beta"] {
                names.push(format!("hidden{l}.{t}"));
            }
        }
        names.push("output.weight".into());
        names.push("output.bias".into());
        names
    }

    /// Every stored tensor in file order with its shape.
    pub fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        fn s<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
            a.as_slice().expect("standard layout")
        }
        fn bn<'a>(prefix: &str, b: &'a BatchNorm) -> [(String, Vec<usize>, &'a [f64]); 4] {
            let n = b.gamma.len();
            [
                ("gamma", &b.gamma),
                ("beta", &b.beta),
                ("mean", &b.mean),
                ("var", &b.var),
            ]
            .map(|(t, a)| (format!("{prefix}.{t}"), vec![n], s(a)))
        }
        let mut out: Vec<(String, Vec<usize>, &[f64])> = bn("input_bn", &self.input_bn).into();
        for (l, h) in self.hidden.iter().enumerate() {
            let w = &h.linear.weight;
            out.push((format!("hidden{l}.weight"), w.shape().to_vec(), s(w)));
            out.push((format!("hidden{l}.bias"), vec![h.linear.bias.len()], s(&h.linear.bias)));
            out.extend(bn(&format!("hidden{l}.bn"), &h.bn));
        }
        let w = &self.output.weight;
        out.push(("output.weight".into(), w.shape().to_vec(), s(w)));
        out.push(("output.bias".into(), vec![OUTPUT], s(&self.output.bias)));
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        fn s<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
            a.as_slice_mut().expect("standard layout")
        }
        fn bn<'a>(b: &'a mut BatchNorm, out: &mut Vec<&'a mut [f64]>) {
            out.extend([s(&mut b.gamma), s(&mut b.beta), s(&mut b.mean), s(&mut b.var)]);
        }
        let mut out = Vec::new();
        bn(&mut self.input_bn, &mut out);
        for h in &mut self.hidden {
            out.push(s(&mut h.linear.weight));
            out.push(s(&mut h.linear.bias));
            bn(&mut h.bn, &mut out);
        }
        out.push(s(&mut self.output.weight));
        out.push(s(&mut self.output.bias));
        out
    }

    /// Rounds every stored tensor to `f32` so the on-disk form is exact.
    pub fn quantize(&mut self) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v = f64::from(*v as f32);
            }
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.2.len()).sum()
    }

    /// Running-statistics update after a training batch.
    pub(crate) fn update_running_stats(&mut self, stats: &[BatchStats]) {
        let bns = std::iter::once(&mut self.input_bn).chain(self.hidden.iter_mut().map(|h| &mut h.bn));
        for (bn, (mean, var)) in bns.zip(stats) {
            bn.mean = &bn.mean * (1.0 - BN_MOMENTUM) + mean * BN_MOMENTUM;
            bn.var = (&bn.var * (1.0 - BN_MOMENTUM) + var * BN_MOMENTUM).mapv_into(|v| v.max(VAR_FLOOR));
        }
    }

    /// Eval-mode prediction in target units.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut out = self.forward(x, Mode::Eval, 0)?;
        for mut row in out.rows_mut() {
            for c in 0..OUTPUT {
                row[c] = row[c] * self.target_std[c] + self.target_mean[c];
            }
        }
        Ok(out)
    }

    pub(crate) fn standardize(&self, y: ArrayView2<f64>) -> Array2<f64> {
        let mut out = y.to_owned();
        for mut row in out.rows_mut() {
            for c in 0..OUTPUT {
                row[c] = (row[c] - self.target_mean[c]) / self.target_std[c];
            }
        }
        out
    }
}
