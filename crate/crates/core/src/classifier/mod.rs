//! A small 1D convolutional classifier over feature vectors.
//!
//! The input vector is treated as a one-channel sequence. Each conv stage
//! is `Conv1d (stride 1, same padding) → BatchNorm → ReLU`; the last stage
//! is flattened into a fully connected layer followed by softmax. All
//! learnable parameters live in one flat `Vec<f64>` so the optimizer,
//! gradient checking and serialization can treat them uniformly.

mod gradcheck;
mod io;
mod net;
mod train;

pub use gradcheck::{gradient_check, GradCheckReport};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC};
pub use train::{norm_stats, train, train_with_shape, TrainingConfig, TrainingReport};

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, LabeledDataset};
use crate::metrics::ConfusionMatrix;
use net::Layout;

use net::forward_eval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvStage {
    pub channels: usize,
    /// Odd kernel width; padding is `(kernel - 1) / 2` on each side.
    pub kernel: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnShape {
    pub input_len: usize,
    pub stages: Vec<ConvStage>,
    pub n_classes: usize,
}

impl CnnShape {
    /// Three stages with kernels 3, 5, 7 and 128, 64, `last` filters, where
    /// `last` is the class count for multi-class problems and 32 for binary
    /// ones.
    pub fn standard(input_len: usize, n_classes: usize) -> Self {
        let last = if n_classes <= 2 { 32 } else { n_classes };
        Self::with_channels(input_len, n_classes, [128, 64, last])
    }

    pub fn with_channels(input_len: usize, n_classes: usize, channels: [usize; 3]) -> Self {
        Self {
            input_len,
            stages: channels
                .iter()
                .zip([3, 5, 7])
                .map(|(&channels, kernel)| ConvStage { channels, kernel })
                .collect(),
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.n_classes < 2 {
            return Err(Error::Invalid(format!(
                "network needs input_len > 0 and at least 2 classes, got {} and {}",
                self.input_len, self.n_classes
            )));
        }
        if self.stages.iter().any(|s| s.channels == 0 || s.kernel % 2 == 0) {
            return Err(Error::Invalid("conv stages need channels > 0 and odd kernels".into()));
        }
        Ok(())
    }

    /// Channels entering the fully connected layer times sequence length.
    pub fn fc_inputs(&self) -> usize {
        self.stages.last().map_or(1, |s| s.channels) * self.input_len
    }
}

/// Running batch-norm statistics for one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnModel {
    pub shape: CnnShape,
    pub params: Vec<f64>,
    pub running: Vec<RunningStats>,
    /// Per-feature z-score statistics of the training data.
    pub norm_mean: Vec<f64>,
    pub norm_std: Vec<f64>,
    pub classes: Vec<String>,
    pub bank_hash: String,
    pub preset: String,
    /// Run configuration JSON echoed from the training features, if any.
    pub run_config: Option<String>,
    layout: Layout,
}

impl CnnModel {
    /// Fresh model with He-normal conv and FC weights drawn from `seed`,
    /// zero biases, unit BN scales and identity normalization.
    pub fn init(shape: CnnShape, classes: Vec<String>, seed: u64) -> Result<Self> {
        shape.validate()?;
        if classes.len() != shape.n_classes {
            return Err(Error::Invalid(format!(
                "{} class names for {} outputs",
                classes.len(),
                shape.n_classes
            )));
        }
        let layout = Layout::new(&shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = layout.init_params(&mut rng);
        let running = shape
            .stages
            .iter()
            .map(|s| RunningStats {
                mean: vec![0.0; s.channels],
                var: vec![1.0; s.channels],
            })
            .collect();
        let d = shape.input_len;
        Ok(Self {
            shape,
            params,
            running,
            norm_mean: vec![0.0; d],
            norm_std: vec![1.0; d],
            classes,
            bank_hash: String::new(),
            preset: String::new(),
            run_config: None,
            layout,
        })
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Named parameter tensors with their shapes, in storage order.
    pub fn param_summary(&self) -> Vec<(String, Vec<usize>)> {
        self.layout.summary()
    }

    /// Mutable view of the fully connected weight matrix
    /// (`n_classes × fc_inputs`).
    pub fn fc_weights_mut(&mut self) -> &mut [f64] {
        let r = self.layout.fc_w.clone();
        &mut self.params[r]
    }

    /// BN shift of one stage.
    pub fn bn_beta_mut(&mut self, stage: usize) -> &mut [f64] {
        let r = self.layout.bn[stage].1.clone();
        &mut self.params[r]
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.norm_mean.iter().zip(&self.norm_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.shape.input_len {
            return Err(Error::LengthMismatch {
                expected: self.shape.input_len,
                found: len,
            });
        }
        Ok(())
    }

    /// Class probabilities for pre-normalized rows, using running BN
    /// statistics. Each row is processed independently, so results do not
    /// depend on batch composition.
    pub fn forward(&self, batch: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_len(batch.ncols())?;
        Ok(forward_eval(self, batch))
    }

    /// Argmax class and its probability for a raw (unnormalized) feature
    /// vector. Ties go to the earlier class in the catalog.
    pub fn predict(&self, fv: &FeatureVector) -> Result<(String, f64)> {
        if !self.bank_hash.is_empty() && fv.bank_hash != self.bank_hash {
            return Err(Error::BankMismatch {
                expected: self.bank_hash.clone(),
                found: fv.bank_hash.clone(),
            });
        }
        let probs = self.predict_rows(std::slice::from_ref(&fv.values))?;
        let (i, p) = argmax(probs.row(0).as_slice().unwrap());
        Ok((self.classes[i].clone(), p))
    }

    /// Probabilities for raw feature rows.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Array2<f64>> {
        let d = self.shape.input_len;
        let mut x = Array2::zeros((rows.len(), d));
        for (i, r) in rows.iter().enumerate() {
            self.check_len(r.len())?;
            x.row_mut(i).assign(&ndarray::ArrayView1::from(&self.normalize(r)[..]));
        }
        self.forward(x.view())
    }
}

/// Confusion matrix of the model's predictions on a labeled dataset.
pub fn evaluate(model: &CnnModel, data: &LabeledDataset) -> Result<ConfusionMatrix> {
    if !model.bank_hash.is_empty() && data.bank_hash != model.bank_hash {
        return Err(Error::BankMismatch {
            expected: model.bank_hash.clone(),
            found: data.bank_hash.clone(),
        });
    }
    let truth = data
        .rows
        .iter()
        .map(|r| {
            model
                .classes
                .iter()
                .position(|c| *c == r.label)
                .ok_or_else(|| Error::Invalid(format!("label {:?} is not in the model's catalog", r.label)))
        })
        .collect::<Result<Vec<usize>>>()?;
    let rows: Vec<Vec<f64>> = data.rows.iter().map(|r| r.values.clone()).collect();
    let probs = model.predict_rows(&rows)?;
    let pairs = truth
        .into_iter()
        .zip(probs.rows())
        .map(|(t, p)| (t, argmax(p.as_slice().unwrap()).0));
    Ok(ConfusionMatrix::from_indices(model.classes.clone(), pairs))
}

/// Index and value of the first maximum.
pub fn argmax(p: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    (best, p[best])
}
