//! Corrupted copies of point clouds at two severity levels.
//!
//! Apart from the downsampling fractions (10% and 30% of points removed),
//! the severity constants are local choices and are reported as such in
//! output metadata. Outputs are never renormalized.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::pc_io::{Point3, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorruptionKind {
    UniformDownsample,
    UniformNoise,
    GaussianNoise,
    Upsample,
    Rotation,
    Shear,
    Impulse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Severity {
    Low,
    High,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 7] = [
        Self::UniformDownsample,
        Self::UniformNoise,
        Self::GaussianNoise,
        Self::Upsample,
        Self::Rotation,
        Self::Shear,
        Self::Impulse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::UniformDownsample => "downsample",
            Self::UniformNoise => "uniform-noise",
            Self::GaussianNoise => "gaussian-noise",
            Self::Upsample => "upsample",
            Self::Rotation => "rotation",
            Self::Shear => "shear",
            Self::Impulse => "impulse",
        }
    }

    /// `(low, high)` severity parameter; units documented per kind in
    /// [`apply_corruption`].
    pub fn levels(self) -> (f64, f64) {
        match self {
            Self::UniformDownsample => (0.10, 0.30),
            Self::UniformNoise => (0.01, 0.05),
            Self::GaussianNoise => (0.01, 0.05),
            Self::Upsample => (0.10, 0.50),
            Self::Rotation => (15.0, 180.0),
            Self::Shear => (0.05, 0.25),
            Self::Impulse => (0.01, 0.10),
        }
    }

    pub fn level(self, severity: Severity) -> f64 {
        let (lo, hi) = self.levels();
        match severity {
            Severity::Low => lo,
            Severity::High => hi,
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Invalid(format!("unknown corruption {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Low => "low",
            Severity::High => "high",
        })
    }
}

impl FromStr for Severity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "low" => Ok(Severity::Low),
            "high" => Ok(Severity::High),
            _ => Err(Error::Invalid(format!("severity must be low or high, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub severity: Severity,
    pub seed: u64,
}

impl CorruptionSpec {
    /// One-line description for output metadata.
    pub fn describe(&self) -> String {
        format!(
            "corruption kind={} severity={} seed={} level={} (locally defined severity constants)",
            self.kind,
            self.severity,
            self.seed,
            self.kind.level(self.severity)
        )
    }
}

type Mat3 = [[f64; 3]; 3];

fn mat_apply(m: &Mat3, p: Point3) -> Point3 {
    std::array::from_fn(|r| m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2])
}

/// Rotation by `angle` radians about `axis` (Rodrigues).
pub fn rotation_matrix(axis: Point3, angle: f64) -> Mat3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|c| c / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

pub fn rotate(cloud: &PointCloud, axis: Point3, angle: f64) -> PointCloud {
    if angle == 0.0 {
        return cloud.clone();
    }
    let m = rotation_matrix(axis, angle);
    PointCloud {
        points: cloud.points.iter().map(|&p| mat_apply(&m, p)).collect(),
        label: cloud.label.clone(),
    }
}

fn random_axis(rng: &mut ChaCha8Rng) -> Point3 {
    // uniform on the sphere via z and azimuth
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn count(frac: f64, n: usize) -> usize {
    (frac * n as f64).round() as usize
}

/// Per kind, with `L` the severity level and `D` the bounding-box diagonal:
///
/// | kind | effect |
/// |---|---|
/// | downsample | keep `round((1-L)·n)` distinct points, original order |
/// | uniform-noise | add `U(-L·D, L·D)` per coordinate |
/// | gaussian-noise | add `N(0, (L·D)²)` per coordinate |
/// | upsample | append `round(L·n)` copies of random points jittered by `N(0, (0.01·D)²)` |
/// | rotation | random axis, angle `U(0, L°)` |
/// | shear | `I` plus off-diagonal entries `U(-L, L)` |
/// | impulse | move `round(L·n)` distinct points by `U(-0.3·D, 0.3·D)` per coordinate |
pub fn apply_corruption(cloud: &PointCloud, spec: &CorruptionSpec) -> Result<PointCloud> {
    if cloud.is_empty() {
        return Err(Error::Invalid("cannot corrupt an empty cloud".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let level = spec.kind.level(spec.severity);
    let n = cloud.len();
    let diag = cloud.diagonal();
    let pts = &cloud.points;

    let points: Vec<Point3> = match spec.kind {
        CorruptionKind::UniformDownsample => {
            let keep = count(1.0 - level, n).max(1);
            let mut idx = sample(&mut rng, n, keep).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pts[i]).collect()
        }
        CorruptionKind::UniformNoise => {
            let a = level * diag;
            pts.iter()
                .map(|p| p.map(|c| if a > 0.0 { c + rng.random_range(-a..=a) } else { c }))
                .collect()
        }
        CorruptionKind::GaussianNoise => {
            let normal = Normal::new(0.0, level * diag).map_err(|e| Error::Invalid(e.to_string()))?;
            pts.iter().map(|p| p.map(|c| c + normal.sample(&mut rng))).collect()
        }
        CorruptionKind::Upsample => {
            let sigma = CorruptionKind::GaussianNoise.level(Severity::Low) * diag;
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::Invalid(e.to_string()))?;
            let extra = count(level, n);
            let mut out = pts.clone();
            out.extend((0..extra).map(|_| {
                let p = pts[rng.random_range(0..n)];
                p.map(|c| c + normal.sample(&mut rng))
            }));
            out
        }
        CorruptionKind::Rotation => {
            let axis = random_axis(&mut rng);
            let angle = rng.random_range(0.0..=level).to_radians();
            return Ok(rotate(cloud, axis, angle));
        }
        CorruptionKind::Shear => {
            let mut m: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            for (r, row) in m.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    if r != c {
                        *v = rng.random_range(-level..=level);
                    }
                }
            }
            pts.iter().map(|&p| mat_apply(&m, p)).collect()
        }
        CorruptionKind::Impulse => {
            let a = 0.3 * diag;
            let mut out = pts.clone();
            for i in sample(&mut rng, n, count(level, n).min(n)) {
                if a > 0.0 {
                    out[i] = out[i].map(|c| c + rng.random_range(-a..=a));
                }
            }
            out
        }
    };
    Ok(PointCloud {
        points,
        label: cloud.label.clone(),
    })
}
