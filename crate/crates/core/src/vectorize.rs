//! Fixed-length summaries of persistence diagrams.
//!
//! Each homology dimension contributes persistent entropy and eleven
//! amplitudes (norms measuring the distance to the empty diagram). The
//! sampled amplitudes (Betti curve, landscapes, heat kernel) are Riemann
//! sums weighted by the sample spacing, so their values do not depend on
//! the sample count beyond discretization error. An empty slice maps to 0
//! for every metric.

use serde::{Deserialize, Serialize};

use crate::cubical::PersistenceDiagram;
use crate::error::{Error, Result};

pub const BLOCK_LEN: usize = 36;
pub const HOMOLOGY_DIMS: usize = 3;

/// Metric names in block order; each covers H0, H1, H2 consecutively.
pub const METRIC_NAMES: [&str; 12] = [
    "entropy",
    "wasserstein_p1",
    "wasserstein_p2",
    "bottleneck",
    "betti_l1",
    "betti_l2",
    "landscape_k1_l1",
    "landscape_k1_l2",
    "landscape_k2_l1",
    "landscape_k2_l2",
    "heat_l1",
    "heat_l2",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub betti_samples: usize,
    pub landscape_samples: usize,
    pub heat_samples: usize,
    pub heat_sigma: f64,
    pub wasserstein_orders: [f64; 2],
    pub landscape_layers: [usize; 2],
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            betti_samples: 100,
            landscape_samples: 100,
            heat_samples: 20,
            heat_sigma: 0.15,
            wasserstein_orders: [1.0, 2.0],
            landscape_layers: [1, 2],
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.betti_samples < 2 || self.landscape_samples < 2 || self.heat_samples < 2 {
            return Err(Error::Invalid("sample counts must be at least 2".into()));
        }
        if !(self.heat_sigma > 0.0 && self.heat_sigma.is_finite()) {
            return Err(Error::Invalid("heat_sigma must be positive".into()));
        }
        if self.wasserstein_orders.iter().any(|&p| !(p >= 1.0)) {
            return Err(Error::Invalid("Wasserstein orders must be >= 1".into()));
        }
        if self.landscape_layers.contains(&0) {
            return Err(Error::Invalid("landscape layers start at 1".into()));
        }
        Ok(())
    }
}

/// The 36 values computed from one diagram.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBlock(pub [f64; BLOCK_LEN]);

impl FeatureBlock {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Value of `metric` (index into [`METRIC_NAMES`]) for homology `dim`.
    pub fn get(&self, metric: usize, dim: usize) -> f64 {
        self.0[metric * HOMOLOGY_DIMS + dim]
    }

    pub fn slot_names() -> Vec<String> {
        METRIC_NAMES
            .iter()
            .flat_map(|m| (0..HOMOLOGY_DIMS).map(move |d| format!("{m}_h{d}")))
            .collect()
    }
}

/// Persistent entropy, natural log.
pub fn entropy(slice: &[(f64, f64)]) -> f64 {
    let total: f64 = slice.iter().map(|(b, d)| d - b).filter(|&l| l > 0.0).sum();
    if !(total > 0.0) {
        return 0.0;
    }
    -slice
        .iter()
        .map(|(b, d)| d - b)
        .filter(|&l| l > 0.0)
        .map(|l| {
            let p = l / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// L_p norm of the half-lifetimes.
pub fn wasserstein_amplitude(slice: &[(f64, f64)], p: f64) -> f64 {
    if slice.is_empty() {
        return 0.0;
    }
    if p == 1.0 {
        return slice.iter().map(|(b, d)| (d - b) / 2.0).sum();
    }
    slice
        .iter()
        .map(|(b, d)| ((d - b) / 2.0).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Largest half-lifetime.
pub fn bottleneck_amplitude(slice: &[(f64, f64)]) -> f64 {
    slice.iter().map(|(b, d)| (d - b) / 2.0).fold(0.0, f64::max)
}

/// `n` equally spaced samples over `[min birth, max death]` and their
/// spacing, or `None` when the range is degenerate.
fn sample_grid(slice: &[(f64, f64)], n: usize) -> Option<(Vec<f64>, f64)> {
    let lo = slice.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = slice.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return None;
    }
    let span = hi - lo;
    let step = span / (n - 1) as f64;
    let xs = (0..n).map(|j| lo + span * (j as f64 / (n - 1) as f64)).collect();
    Some((xs, step))
}

fn norms(values: impl Iterator<Item = f64>, weight: f64) -> (f64, f64) {
    let (mut l1, mut l2) = (0.0, 0.0);
    for v in values {
        l1 += v.abs();
        l2 += v * v;
    }
    (l1 * weight, (l2 * weight).sqrt())
}

/// Number of half-open bars `[b, d)` containing `s`.
pub fn betti_curve_at(slice: &[(f64, f64)], s: f64) -> usize {
    slice.iter().filter(|&&(b, d)| b <= s && s < d).count()
}

/// L1 and L2 norms of the sampled Betti curve.
pub fn betti_amplitude(slice: &[(f64, f64)], samples: usize) -> (f64, f64) {
    match sample_grid(slice, samples) {
        Some((xs, step)) => norms(xs.iter().map(|&s| betti_curve_at(slice, s) as f64), step),
        None => (0.0, 0.0),
    }
}

/// Tent function of one bar.
pub fn tent(b: f64, d: f64, x: f64) -> f64 {
    (x - b).min(d - x).max(0.0)
}

/// `k`-th largest tent value at `x` (k starts at 1), 0 if fewer than k bars.
pub fn landscape_at(slice: &[(f64, f64)], k: usize, x: f64) -> f64 {
    let mut v: Vec<f64> = slice.iter().map(|&(b, d)| tent(b, d, x)).collect();
    if v.len() < k {
        return 0.0;
    }
    v.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    v[k - 1]
}

/// `(L1, L2)` norms of the sampled landscape layers in `layers`.
pub fn landscape_amplitude(slice: &[(f64, f64)], samples: usize, layers: [usize; 2]) -> [(f64, f64); 2] {
    let Some((xs, step)) = sample_grid(slice, samples) else {
        return [(0.0, 0.0); 2];
    };
    let top = layers[0].max(layers[1]);
    let mut rows = vec![Vec::with_capacity(xs.len()); 2];
    let mut vals = Vec::with_capacity(slice.len());
    for &x in &xs {
        vals.clear();
        vals.extend(slice.iter().map(|&(b, d)| tent(b, d, x)));
        vals.sort_unstable_by(|a, b| b.total_cmp(a));
        vals.resize(vals.len().max(top), 0.0);
        for (row, &k) in rows.iter_mut().zip(&layers) {
            row.push(vals[k - 1]);
        }
    }
    [norms(rows[0].iter().copied(), step), norms(rows[1].iter().copied(), step)]
}

fn gaussian(dx: f64, dy: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (-(dx * dx + dy * dy) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
}

/// Signed Gaussian sum on the birth–death plane: a positive bump on every
/// bar and a negative one on its mirror image across the diagonal.
pub fn heat_function(slice: &[(f64, f64)], sigma: f64, x: f64, y: f64) -> f64 {
    slice
        .iter()
        .map(|&(b, d)| gaussian(x - b, y - d, sigma) - gaussian(x - d, y - b, sigma))
        .sum()
}

/// `(L1, L2)` norms of the heat function sampled at the centers of an
/// `n × n` grid of cells covering `[min birth, max death]^2`.
pub fn heat_amplitude(slice: &[(f64, f64)], samples: usize, sigma: f64) -> (f64, f64) {
    let lo = slice.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = slice.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if slice.is_empty() || !(hi > lo) {
        return (0.0, 0.0);
    }
    let h = (hi - lo) / samples as f64;
    let centers: Vec<f64> = (0..samples).map(|i| lo + (i as f64 + 0.5) * h).collect();
    let vals = centers
        .iter()
        .flat_map(|&x| centers.iter().map(move |&y| (x, y)))
        .map(|(x, y)| heat_function(slice, sigma, x, y));
    norms(vals, h * h)
}

pub fn vectorize_diagram(diagram: &PersistenceDiagram, cfg: &SamplingConfig) -> FeatureBlock {
    let mut out = [0.0; BLOCK_LEN];
    for dim in 0..HOMOLOGY_DIMS {
        let s = diagram.slice(dim);
        let (bl1, bl2) = betti_amplitude(&s, cfg.betti_samples);
        let [(k1l1, k1l2), (k2l1, k2l2)] = landscape_amplitude(&s, cfg.landscape_samples, cfg.landscape_layers);
        let (hl1, hl2) = heat_amplitude(&s, cfg.heat_samples, cfg.heat_sigma);
        let metrics = [
            entropy(&s),
            wasserstein_amplitude(&s, cfg.wasserstein_orders[0]),
            wasserstein_amplitude(&s, cfg.wasserstein_orders[1]),
            bottleneck_amplitude(&s),
            bl1,
            bl2,
            k1l1,
            k1l2,
            k2l1,
            k2l2,
            hl1,
            hl2,
        ];
        for (m, v) in metrics.into_iter().enumerate() {
            out[m * HOMOLOGY_DIMS + dim] = v;
        }
    }
    FeatureBlock(out)
}
