use std::ops::Range;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, ArrayViewMut2, ArrayViewMut3, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{CnnModel, CnnShape};

pub(crate) const BN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ConvLayout {
    /// Weights stored as `(kernel, out, in)`, one matrix per tap.
    pub w: Range<usize>,
    pub b: Range<usize>,
    pub ci: usize,
    pub co: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Layout {
    pub conv: Vec<ConvLayout>,
    /// (gamma, beta) per stage.
    pub bn: Vec<(Range<usize>, Range<usize>)>,
    pub fc_w: Range<usize>,
    pub fc_b: Range<usize>,
    pub total: usize,
    len: usize,
    classes: usize,
}

impl Layout {
    pub fn new(shape: &CnnShape) -> Self {
        let mut off = 0;
        let mut take = |n: usize| {
            let r = off..off + n;
            off += n;
            r
        };
        let mut conv = Vec::new();
        let mut bn = Vec::new();
        let mut ci = 1;
        for st in &shape.stages {
            conv.push(ConvLayout {
                w: take(st.kernel * st.channels * ci),
                b: take(st.channels),
                ci,
                co: st.channels,
                k: st.kernel,
            });
            bn.push((take(st.channels), take(st.channels)));
            ci = st.channels;
        }
        let fc_w = take(shape.n_classes * shape.fc_inputs());
        let fc_b = take(shape.n_classes);
        Self {
            conv,
            bn,
            fc_w,
            fc_b,
            total: off,
            len: shape.input_len,
            classes: shape.n_classes,
        }
    }

    pub fn init_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.total];
        let mut he = |r: &Range<usize>, fan_in: usize, p: &mut [f64]| {
            let n = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            for v in &mut p[r.clone()] {
                *v = n.sample(rng);
            }
        };
        for c in &self.conv {
            he(&c.w, c.ci * c.k, &mut p);
        }
        let fc_in = self.fc_w.len() / self.classes;
        he(&self.fc_w, fc_in, &mut p);
        for (g, _) in &self.bn {
            p[g.clone()].fill(1.0);
        }
        p
    }

    pub fn summary(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            out.push((format!("conv{}.weight", i + 1), vec![c.co, c.ci, c.k]));
            out.push((format!("conv{}.bias", i + 1), vec![c.co]));
            out.push((format!("bn{}.gamma", i + 1), vec![c.co]));
            out.push((format!("bn{}.beta", i + 1), vec![c.co]));
        }
        let fc_in = self.fc_w.len() / self.classes;
        out.push(("fc.weight".into(), vec![self.classes, fc_in]));
        out.push(("fc.bias".into(), vec![self.classes]));
        out
    }

    fn conv_w<'a>(&self, l: usize, p: &'a [f64]) -> ArrayView3<'a, f64> {
        let c = &self.conv[l];
        ArrayView3::from_shape((c.k, c.co, c.ci), &p[c.w.clone()]).unwrap()
    }

    fn fc_w<'a>(&self, p: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape((self.classes, self.fc_w.len() / self.classes), &p[self.fc_w.clone()])
            .unwrap()
    }
}

/// Output range `t0..t1` paired with input offset `shift` for one tap.
fn tap_range(k: usize, width: usize, len: usize) -> Option<(usize, usize, isize)> {
    let shift = k as isize - ((width - 1) / 2) as isize;
    let t0 = (-shift).max(0) as usize;
    let t1 = (len as isize - shift).min(len as isize);
    (t1 > t0 as isize).then_some((t0, t1 as usize, shift))
}

fn shifted(t0: usize, t1: usize, shift: isize) -> Range<usize> {
    (t0 as isize + shift) as usize..(t1 as isize + shift) as usize
}

fn conv_sample(w: ArrayView3<f64>, bias: &[f64], x: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
    let (kw, _, _) = w.dim();
    let len = x.ncols();
    for (mut row, &b) in out.rows_mut().into_iter().zip(bias) {
        row.fill(b);
    }
    for k in 0..kw {
        if let Some((t0, t1, sh)) = tap_range(k, kw, len) {
            general_mat_mul(
                1.0,
                &w.index_axis(Axis(0), k),
                &x.slice(s![.., shifted(t0, t1, sh)]),
                1.0,
                &mut out.slice_mut(s![.., t0..t1]),
            );
        }
    }
}

fn conv_forward(model: &CnnModel, l: usize, x: &Array3<f64>) -> Array3<f64> {
    let lay = model.layout();
    let c = &lay.conv[l];
    let w = lay.conv_w(l, &model.params);
    let bias = &model.params[c.b.clone()];
    let (b, _, len) = x.dim();
    let mut out = Array3::zeros((b, c.co, len));
    for (xs, os) in x.outer_iter().zip(out.outer_iter_mut()) {
        conv_sample(w, bias, xs, os);
    }
    out
}

/// Per-channel mean and biased variance over batch and length.
fn channel_stats(z: &Array3<f64>) -> (Vec<f64>, Vec<f64>) {
    let (b, c, len) = z.dim();
    let n = (b * len) as f64;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for ch in 0..c {
        let zc = z.index_axis(Axis(1), ch);
        let m = zc.sum() / n;
        mean[ch] = m;
        var[ch] = zc.fold(0.0, |acc, &v| acc + (v - m) * (v - m)) / n;
    }
    (mean, var)
}

/// Normalize with the given statistics, then scale, shift and ReLU in place.
/// Returns the normalized values when `keep_xhat` is set.
fn bn_relu(
    z: &mut Array3<f64>,
    mean: &[f64],
    var: &[f64],
    gamma: &[f64],
    beta: &[f64],
    keep_xhat: bool,
) -> (Option<Array3<f64>>, Vec<f64>) {
    let inv: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = keep_xhat.then(|| Array3::zeros(z.dim()));
    for ch in 0..mean.len() {
        let mut zc = z.index_axis_mut(Axis(1), ch);
        if let Some(xh) = xhat.as_mut() {
            let mut xc = xh.index_axis_mut(Axis(1), ch);
            ndarray::Zip::from(&mut zc).and(&mut xc).for_each(|v, h| {
                *h = (*v - mean[ch]) * inv[ch];
                *v = (gamma[ch] * *h + beta[ch]).max(0.0);
            });
        } else {
            zc.mapv_inplace(|v| (gamma[ch] * ((v - mean[ch]) * inv[ch]) + beta[ch]).max(0.0));
        }
    }
    (xhat, inv)
}

fn fc_forward(model: &CnnModel, feat: &Array3<f64>) -> Array2<f64> {
    let lay = model.layout();
    let w = lay.fc_w(&model.params);
    let bias = &model.params[lay.fc_b.clone()];
    let b = feat.dim().0;
    let flat = feat.view().into_shape_with_order((b, w.ncols())).unwrap();
    let mut logits = Array2::zeros((b, lay.classes));
    for (i, x) in flat.rows().into_iter().enumerate() {
        for (j, wj) in w.rows().into_iter().enumerate() {
            logits[[i, j]] = bias[j] + wj.dot(&x);
        }
    }
    logits
}

pub(crate) fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
    p
}

fn as_channels(x: ArrayView2<f64>) -> Array3<f64> {
    let (b, len) = x.dim();
    x.to_owned().into_shape_with_order((b, 1, len)).unwrap()
}

/// Inference forward pass with running statistics, in chunks so memory
/// stays bounded. Every sample's arithmetic is independent of the others.
pub(crate) fn forward_eval(model: &CnnModel, x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), model.shape.n_classes));
    for (chunk, mut dst) in x
        .axis_chunks_iter(Axis(0), 32)
        .zip(out.axis_chunks_iter_mut(Axis(0), 32))
    {
        let h = features_eval(model, chunk, model.shape.stages.len());
        dst.assign(&softmax_rows(&fc_forward(model, &h)));
    }
    out
}

/// Activations after the first `depth` stages, using running statistics.
fn features_eval(model: &CnnModel, x: ArrayView2<f64>, depth: usize) -> Array3<f64> {
    let lay = model.layout();
    let mut h = as_channels(x);
    for l in 0..depth {
        let mut z = conv_forward(model, l, &h);
        let (g, b) = &lay.bn[l];
        let rs = &model.running[l];
        bn_relu(&mut z, &rs.mean, &rs.var, &model.params[g.clone()], &model.params[b.clone()], false);
        h = z;
    }
    h
}

/// Pre-BN conv output of stage `l` (running statistics for earlier stages).
pub(crate) fn pre_bn_eval(model: &CnnModel, x: ArrayView2<f64>, l: usize) -> Array3<f64> {
    conv_forward(model, l, &features_eval(model, x, l))
}

/// Cached activations of a training-mode forward pass.
pub(crate) struct Trace {
    /// `acts[0]` is the input; `acts[l + 1]` the ReLU output of stage `l`.
    acts: Vec<Array3<f64>>,
    xhat: Vec<Array3<f64>>,
    inv_std: Vec<Vec<f64>>,
    /// Batch mean and biased variance per stage.
    pub batch_stats: Vec<(Vec<f64>, Vec<f64>)>,
    pub probs: Array2<f64>,
}

/// Forward pass using batch statistics, keeping what backprop needs.
pub(crate) fn forward_train(model: &CnnModel, x: ArrayView2<f64>) -> Trace {
    let lay = model.layout();
    let mut acts = vec![as_channels(x)];
    let mut xhat = Vec::new();
    let mut inv_std = Vec::new();
    let mut batch_stats = Vec::new();
    for l in 0..lay.conv.len() {
        let mut z = conv_forward(model, l, acts.last().unwrap());
        let (mean, var) = channel_stats(&z);
        let (g, b) = &lay.bn[l];
        let (xh, inv) = bn_relu(&mut z, &mean, &var, &model.params[g.clone()], &model.params[b.clone()], true);
        xhat.push(xh.unwrap());
        inv_std.push(inv);
        batch_stats.push((mean, var));
        acts.push(z);
    }
    let probs = softmax_rows(&fc_forward(model, acts.last().unwrap()));
    Trace {
        acts,
        xhat,
        inv_std,
        batch_stats,
        probs,
    }
}

/// Mean negative log-likelihood of `labels` under `probs`.
pub(crate) fn cross_entropy(probs: &Array2<f64>, labels: &[usize]) -> f64 {
    let s: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probs[[i, y]].max(f64::MIN_POSITIVE).ln())
        .sum();
    s / labels.len() as f64
}

/// Gradient of the mean cross-entropy with respect to all parameters.
pub(crate) fn backward(model: &CnnModel, trace: &Trace, labels: &[usize]) -> Vec<f64> {
    let lay = model.layout();
    let p = &model.params;
    let mut grad = vec![0.0; lay.total];
    let b = labels.len();

    let mut dlogits = trace.probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        dlogits[[i, y]] -= 1.0;
    }
    dlogits.mapv_inplace(|v| v / b as f64);

    // fully connected
    let feat = trace.acts.last().unwrap();
    let fc_in = lay.fc_w.len() / lay.classes;
    let flat = feat.view().into_shape_with_order((b, fc_in)).unwrap();
    {
        let mut gw =
            ArrayViewMut2::from_shape((lay.classes, fc_in), &mut grad[lay.fc_w.clone()]).unwrap();
        for (dl, x) in dlogits.rows().into_iter().zip(flat.rows()) {
            for (j, mut gj) in gw.rows_mut().into_iter().enumerate() {
                gj.scaled_add(dl[j], &x);
            }
        }
    }
    for (j, g) in grad[lay.fc_b.clone()].iter_mut().enumerate() {
        *g = dlogits.column(j).sum();
    }
    if lay.conv.is_empty() {
        return grad;
    }
    let w = lay.fc_w(p);
    let mut dflat = dlogits.dot(&w);
    let mut dh = {
        let (_, c, len) = feat.dim();
        std::mem::take(&mut dflat).into_shape_with_order((b, c, len)).unwrap()
    };

    for l in (0..lay.conv.len()).rev() {
        let c = &lay.conv[l];
        // ReLU
        ndarray::Zip::from(&mut dh)
            .and(&trace.acts[l + 1])
            .for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
        // batch norm
        let (gr, br) = &lay.bn[l];
        let gamma = &p[gr.clone()];
        let xhat = &trace.xhat[l];
        let n = (b * lay.len) as f64;
        for ch in 0..c.co {
            let dy = dh.index_axis(Axis(1), ch);
            let xh = xhat.index_axis(Axis(1), ch);
            let sum_dy = dy.sum();
            let sum_dyx = ndarray::Zip::from(&dy).and(&xh).fold(0.0, |a, &d, &x| a + d * x);
            grad[gr.start + ch] = sum_dyx;
            grad[br.start + ch] = sum_dy;
            let k = gamma[ch] * trace.inv_std[l][ch] / n;
            let mut dyc = dh.index_axis_mut(Axis(1), ch);
            ndarray::Zip::from(&mut dyc)
                .and(&xh)
                .for_each(|d, &x| *d = k * (n * *d - sum_dy - x * sum_dyx));
        }
        // conv: dh now holds the gradient of the pre-BN output
        let x = &trace.acts[l];
        let w = lay.conv_w(l, p);
        for (o, g) in grad[c.b.clone()].iter_mut().enumerate() {
            *g = dh.index_axis(Axis(1), o).sum();
        }
        {
            let mut gw = ArrayViewMut3::from_shape((c.k, c.co, c.ci), &mut grad[c.w.clone()]).unwrap();
            for (xs, ds) in x.outer_iter().zip(dh.outer_iter()) {
                for k in 0..c.k {
                    if let Some((t0, t1, sh)) = tap_range(k, c.k, lay.len) {
                        general_mat_mul(
                            1.0,
                            &ds.slice(s![.., t0..t1]),
                            &xs.slice(s![.., shifted(t0, t1, sh)]).t(),
                            1.0,
                            &mut gw.index_axis_mut(Axis(0), k),
                        );
                    }
                }
            }
        }
        if l == 0 {
            break;
        }
        let mut dx = Array3::zeros(x.dim());
        for (mut dxs, ds) in dx.outer_iter_mut().zip(dh.outer_iter()) {
            for k in 0..c.k {
                if let Some((t0, t1, sh)) = tap_range(k, c.k, lay.len) {
                    general_mat_mul(
                        1.0,
                        &w.index_axis(Axis(0), k).t(),
                        &ds.slice(s![.., t0..t1]),
                        1.0,
                        &mut dxs.slice_mut(s![.., shifted(t0, t1, sh)]),
                    );
                }
            }
        }
        dh = dx;
    }
    grad
}
