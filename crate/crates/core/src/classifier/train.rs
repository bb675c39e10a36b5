use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{backward, cross_entropy, forward_train, pre_bn_eval};
use super::{CnnModel, CnnShape, RunningStats};
use crate::error::{Error, Result};
use crate::features::LabeledDataset;

const BN_MOMENTUM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub max_epochs: usize,
    /// Stop once the mean training loss of an epoch drops to this value.
    pub loss_stop: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Filter counts of the three conv stages; defaults to 128, 64 and the
    /// class count (32 for two classes).
    pub channels: Option<[usize; 3]>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            max_epochs: 1000,
            loss_stop: 0.005,
            learning_rate: 1e-3,
            batch_size: 128,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            channels: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("training: {m}")));
        if self.max_epochs == 0 || self.batch_size == 0 {
            return bad("max_epochs and batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) || !(self.loss_stop >= 0.0) {
            return bad("epsilon must be positive and loss_stop non-negative");
        }
        if self.channels.is_some_and(|c| c.contains(&0)) {
            return bad("channels must be positive");
        }
        Ok(())
    }

    pub fn shape(&self, input_len: usize, n_classes: usize) -> CnnShape {
        match self.channels {
            Some(c) => CnnShape::with_channels(input_len, n_classes, c),
            None => CnnShape::standard(input_len, n_classes),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingReport {
    /// Mean loss of each completed epoch.
    pub losses: Vec<f64>,
    pub stopped_early: bool,
}

impl TrainingReport {
    pub fn epochs(&self) -> usize {
        self.losses.len()
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainingConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon);
        }
    }
}

/// Population mean and standard deviation of each column; constant columns
/// get a unit deviation.
pub fn norm_stats(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mean: Vec<f64> = x.columns().into_iter().map(|c| c.sum() / n).collect();
    let std = x
        .columns()
        .into_iter()
        .zip(&mean)
        .map(|(c, m)| {
            let s = (c.fold(0.0, |a, &v| a + (v - m) * (v - m)) / n).sqrt();
            if s > 1e-12 { s } else { 1.0 }
        })
        .collect();
    (mean, std)
}

/// Train the standard network (or the widths in `cfg.channels`).
pub fn train(data: &LabeledDataset, cfg: &TrainingConfig) -> Result<(CnnModel, TrainingReport)> {
    let classes = data.catalog();
    let shape = cfg.shape(data.dim, classes.len().max(2));
    train_with_shape(data, shape, cfg)
}

/// Train a network of arbitrary shape on the dataset.
pub fn train_with_shape(
    data: &LabeledDataset,
    shape: CnnShape,
    cfg: &TrainingConfig,
) -> Result<(CnnModel, TrainingReport)> {
    cfg.validate()?;
    let classes = data.catalog();
    if classes.len() < 2 {
        return Err(Error::SingleClass(classes.len()));
    }
    if shape.n_classes != classes.len() || shape.input_len != data.dim {
        return Err(Error::Invalid(format!(
            "network shape ({} inputs, {} classes) does not fit data ({} features, {} classes)",
            shape.input_len,
            shape.n_classes,
            data.dim,
            classes.len()
        )));
    }
    let n = data.len();
    let d = data.dim;
    let mut x = Array2::zeros((n, d));
    for (mut row, r) in x.rows_mut().into_iter().zip(&data.rows) {
        if r.values.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                found: r.values.len(),
            });
        }
        row.assign(&ndarray::ArrayView1::from(&r.values[..]));
    }
    let labels: Vec<usize> = data
        .rows
        .iter()
        .map(|r| classes.binary_search(&r.label).unwrap())
        .collect();

    let mut model = CnnModel::init(shape, classes, cfg.seed)?;
    let (mean, std) = norm_stats(&x);
    for mut row in x.rows_mut() {
        for ((v, m), s) in row.iter_mut().zip(&mean).zip(&std) {
            *v = (*v - m) / s;
        }
    }
    model.norm_mean = mean;
    model.norm_std = std;
    model.bank_hash = data.bank_hash.clone();
    model.preset = data.preset.clone();
    model.run_config = data.config.clone();

    let report = fit(&mut model, &x, &labels, cfg)?;
    calibrate_batch_norm(&mut model, &x);
    Ok((model, report))
}

/// Minibatch Adam on pre-normalized rows.
pub(crate) fn fit(
    model: &mut CnnModel,
    x: &Array2<f64>,
    labels: &[usize],
    cfg: &TrainingConfig,
) -> Result<TrainingReport> {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let mut adam = Adam::new(model.params.len());
    let mut order: Vec<usize> = (0..n).collect();
    let mut losses = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), idx);
            let yb: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let trace = forward_train(model, xb.view());
            let loss = cross_entropy(&trace.probs, &yb);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += loss * idx.len() as f64;
            let grad = backward(model, &trace, &yb);
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            adam.step(&mut model.params, &grad, cfg);
            for (rs, (m, v)) in model.running.iter_mut().zip(&trace.batch_stats) {
                let cnt = (idx.len() * model.shape.input_len) as f64;
                let unbias = if cnt > 1.0 { cnt / (cnt - 1.0) } else { 1.0 };
                for c in 0..m.len() {
                    rs.mean[c] = (1.0 - BN_MOMENTUM) * rs.mean[c] + BN_MOMENTUM * m[c];
                    rs.var[c] = (1.0 - BN_MOMENTUM) * rs.var[c] + BN_MOMENTUM * v[c] * unbias;
                }
            }
        }
        let mean_loss = total / n as f64;
        log::info!("epoch {epoch}: loss {mean_loss:.6}");
        losses.push(mean_loss);
        if mean_loss <= cfg.loss_stop {
            return Ok(TrainingReport {
                losses,
                stopped_early: true,
            });
        }
    }
    Ok(TrainingReport {
        losses,
        stopped_early: false,
    })
}

/// Replace the running BN statistics with exact population statistics of
/// the training set, one stage at a time.
pub(crate) fn calibrate_batch_norm(model: &mut CnnModel, x: &Array2<f64>) {
    for l in 0..model.shape.stages.len() {
        let c = model.shape.stages[l].channels;
        let mut sum = vec![0.0; c];
        let mut sq = vec![0.0; c];
        let mut count = 0.0;
        for chunk in x.axis_chunks_iter(Axis(0), 32) {
            let z = pre_bn_eval(model, chunk, l);
            count += (z.dim().0 * z.dim().2) as f64;
            for ch in 0..c {
                let zc = z.index_axis(Axis(1), ch);
                sum[ch] += zc.sum();
                sq[ch] += zc.fold(0.0, |a, &v| a + v * v);
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let var = sq
            .iter()
            .zip(&mean)
            .map(|(s, m)| (s / count - m * m).max(0.0))
            .collect();
        model.running[l] = RunningStats { mean, var };
    }
}
