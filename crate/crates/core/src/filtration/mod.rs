//! Grayscale filtrations of a binary voxel image.
//!
//! Six families turn a binary image into a grayscale one: height along a
//! direction, radial distance from a center, local density, and three
//! Manhattan distance transforms (dilation, erosion, signed distance).
//! All distances are measured in voxel-index units.

pub mod distance;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voxel::{unravel, BinaryImage3D, Dims};
use distance::{l1_distance_transform, UNREACHED};

/// Fractions of the index range at which the 3x3x3 radial centers sit.
pub const RADIAL_GRID_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

/// Where a radial filtration is centered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RadialCenter {
    /// Zero-based index into [`radial_centers`] of the image being filtered.
    Grid(usize),
    /// A fixed voxel index.
    Voxel([usize; 3]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FiltrationSpec {
    Height { direction: [i32; 3] },
    Radial { center: RadialCenter },
    Density { radius: f64 },
    Dilation,
    Erosion,
    SignedDistance,
}

impl FiltrationSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Height { .. } => "height",
            Self::Radial { .. } => "radial",
            Self::Density { .. } => "density",
            Self::Dilation => "dilation",
            Self::Erosion => "erosion",
            Self::SignedDistance => "signed-distance",
        }
    }
}

impl fmt::Display for FiltrationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Height { direction: [x, y, z] } => write!(f, "height:{x},{y},{z}"),
            Self::Radial {
                center: RadialCenter::Grid(i),
            } => write!(f, "radial:c{}", i + 1),
            Self::Radial {
                center: RadialCenter::Voxel([x, y, z]),
            } => write!(f, "radial:{x},{y},{z}"),
            Self::Density { radius } => write!(f, "density:{radius}"),
            other => f.write_str(other.kind()),
        }
    }
}

fn parse_triple<T: FromStr>(s: &str) -> Option<[T; 3]> {
    let v: Vec<T> = s.split(',').map(|t| t.trim().parse().ok()).collect::<Option<_>>()?;
    v.try_into().ok()
}

impl FromStr for FiltrationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("bad filtration spec {s:?}"));
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let spec = match (kind, arg) {
            ("height", Some(a)) => {
                let direction: [i32; 3] = parse_triple(a).ok_or_else(bad)?;
                if direction == [0; 3] || direction.iter().any(|c| c.abs() > 1) {
                    return Err(Error::Invalid(format!(
                        "height direction must be a nonzero vector in {{-1,0,1}}^3, got {a}"
                    )));
                }
                Self::Height { direction }
            }
            ("radial", Some(a)) => {
                let center = if let Some(n) = a.strip_prefix('c') {
                    let n: usize = n.parse().map_err(|_| bad())?;
                    if !(1..=27).contains(&n) {
                        return Err(bad());
                    }
                    RadialCenter::Grid(n - 1)
                } else {
                    RadialCenter::Voxel(parse_triple(a).ok_or_else(bad)?)
                };
                Self::Radial { center }
            }
            ("density", None) => Self::Density { radius: 1.0 },
            ("density", Some(a)) => {
                let radius: f64 = a.parse().map_err(|_| bad())?;
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(bad());
                }
                Self::Density { radius }
            }
            ("dilation", None) => Self::Dilation,
            ("erosion", None) => Self::Erosion,
            ("signed-distance", None) => Self::SignedDistance,
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for FiltrationSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FiltrationSpec> for String {
    fn from(s: FiltrationSpec) -> String {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayscaleImage3D {
    pub dims: Dims,
    pub values: Vec<f64>,
    pub spec: Option<FiltrationSpec>,
}

impl GrayscaleImage3D {
    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Invalid(format!("zero dimension in {dims:?}")));
        }
        let n = dims.iter().product::<usize>();
        if values.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grayscale image has non-finite values".into()));
        }
        Ok(Self {
            dims,
            values,
            spec: None,
        })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// The 26 nonzero vectors of `{-1,0,1}^3`, lexicographic in `(x, y, z)`.
pub fn height_directions() -> Vec<[i32; 3]> {
    let mut out = Vec::with_capacity(26);
    for x in -1..=1 {
        for y in -1..=1 {
            for z in -1..=1 {
                if [x, y, z] != [0, 0, 0] {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// The 27 vertices of a 3x3x3 grid inside the image, grouped into three
/// x-slices (lowest x first) and sorted by `(y, z)` within each slice.
pub fn radial_centers(dims: Dims) -> Vec<[usize; 3]> {
    let pos = |d: usize| RADIAL_GRID_FRACTIONS.map(|f| (f * (d - 1) as f64).round() as usize);
    let (xs, ys, zs) = (pos(dims[0]), pos(dims[1]), pos(dims[2]));
    let mut out = Vec::with_capacity(27);
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                out.push([x, y, z]);
            }
        }
    }
    out
}

pub fn apply(img: &BinaryImage3D, spec: &FiltrationSpec) -> Result<GrayscaleImage3D> {
    let mut g = match *spec {
        FiltrationSpec::Height { direction } => apply_height(img, direction)?,
        FiltrationSpec::Radial { center } => {
            let c = match center {
                RadialCenter::Grid(i) => *radial_centers(img.dims())
                    .get(i)
                    .ok_or_else(|| Error::Invalid(format!("radial grid index {i} out of range")))?,
                RadialCenter::Voxel(c) => c,
            };
            apply_radial(img, c)?
        }
        FiltrationSpec::Density { radius } => apply_density(img, radius)?,
        FiltrationSpec::Dilation => apply_dilation(img)?,
        FiltrationSpec::Erosion => apply_erosion(img),
        FiltrationSpec::SignedDistance => apply_signed_distance(img)?,
    };
    g.spec = Some(*spec);
    Ok(g)
}

fn gray(img: &BinaryImage3D, values: Vec<f64>, spec: FiltrationSpec) -> GrayscaleImage3D {
    GrayscaleImage3D {
        dims: img.dims(),
        values,
        spec: Some(spec),
    }
}

/// Active voxels get their distance to the lowest plane orthogonal to `v`
/// touching the grid; inactive voxels get the largest such distance plus one.
pub fn apply_height(img: &BinaryImage3D, v: [i32; 3]) -> Result<GrayscaleImage3D> {
    if v == [0; 3] {
        return Err(Error::Invalid("height direction must be nonzero".into()));
    }
    let dims = img.dims();
    let norm = (v.iter().map(|&c| (c as f64).powi(2)).sum::<f64>()).sqrt();
    let dot = |p: [usize; 3]| -> i64 { (0..3).map(|k| v[k] as i64 * p[k] as i64).sum() };
    let (mut lo, mut hi) = (0i64, 0i64);
    for k in 0..3 {
        let far = v[k] as i64 * (dims[k] as i64 - 1);
        lo += far.min(0);
        hi += far.max(0);
    }
    let inactive = (hi - lo) as f64 / norm + 1.0;
    let values = img
        .voxels()
        .iter()
        .enumerate()
        .map(|(i, &on)| {
            if on {
                (dot(unravel(dims, i)) - lo) as f64 / norm
            } else {
                inactive
            }
        })
        .collect();
    Ok(gray(img, values, FiltrationSpec::Height { direction: v }))
}

fn dist2(p: [usize; 3], c: [usize; 3]) -> u64 {
    (0..3).map(|k| (p[k].abs_diff(c[k]) as u64).pow(2)).sum()
}

/// Euclidean distance to `c` on active voxels; the largest distance from
/// `c` to any voxel, plus one, elsewhere.
pub fn apply_radial(img: &BinaryImage3D, c: [usize; 3]) -> Result<GrayscaleImage3D> {
    let dims = img.dims();
    if (0..3).any(|k| c[k] >= dims[k]) {
        return Err(Error::Invalid(format!("radial center {c:?} outside {dims:?}")));
    }
    let far: [usize; 3] = std::array::from_fn(|k| if c[k] * 2 >= dims[k] - 1 { 0 } else { dims[k] - 1 });
    let inactive = (dist2(far, c) as f64).sqrt() + 1.0;
    let values = img
        .voxels()
        .iter()
        .enumerate()
        .map(|(i, &on)| {
            if on {
                (dist2(unravel(dims, i), c) as f64).sqrt()
            } else {
                inactive
            }
        })
        .collect();
    Ok(gray(
        img,
        values,
        FiltrationSpec::Radial {
            center: RadialCenter::Voxel(c),
        },
    ))
}

/// Integer offsets inside the closed Euclidean ball of the given radius.
fn ball_offsets(radius: f64) -> Vec<[i64; 3]> {
    let r = radius.floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                if ((dx * dx + dy * dy + dz * dz) as f64) <= r2 {
                    out.push([dx, dy, dz]);
                }
            }
        }
    }
    out
}

/// Number of active voxels within Euclidean distance `radius` of each voxel,
/// the voxel itself included.
pub fn apply_density(img: &BinaryImage3D, radius: f64) -> Result<GrayscaleImage3D> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Invalid(format!("density radius must be positive, got {radius}")));
    }
    let dims = img.dims();
    let offsets = ball_offsets(radius);
    let bounds = dims.map(|d| d as i64);
    let values = (0..img.len())
        .map(|i| {
            let p = unravel(dims, i).map(|c| c as i64);
            offsets
                .iter()
                .filter(|o| {
                    let q = [p[0] + o[0], p[1] + o[1], p[2] + o[2]];
                    (0..3).all(|k| q[k] >= 0 && q[k] < bounds[k])
                        && img.get(q.map(|c| c as usize))
                })
                .count() as f64
        })
        .collect();
    Ok(gray(img, values, FiltrationSpec::Density { radius }))
}

/// Manhattan distance to the nearest active voxel.
pub fn apply_dilation(img: &BinaryImage3D) -> Result<GrayscaleImage3D> {
    if img.active_count() == 0 {
        return Err(Error::EmptyImage);
    }
    let d = l1_distance_transform(img.dims(), img.voxels());
    Ok(gray(img, d.into_iter().map(f64::from).collect(), FiltrationSpec::Dilation))
}

/// Value used for every voxel when the image has no inactive voxel: one
/// more than the largest Manhattan distance inside the grid, plus one.
pub fn erosion_sentinel(dims: Dims) -> f64 {
    (dims.iter().map(|d| d - 1).sum::<usize>() + 2) as f64
}

/// Dilation of the complement, with inactive voxels pinned to zero.
pub fn apply_erosion(img: &BinaryImage3D) -> GrayscaleImage3D {
    let dims = img.dims();
    let inactive: Vec<bool> = img.voxels().iter().map(|b| !b).collect();
    if !inactive.contains(&true) {
        return gray(img, vec![erosion_sentinel(dims); img.len()], FiltrationSpec::Erosion);
    }
    let d = l1_distance_transform(dims, &inactive);
    let values = img
        .voxels()
        .iter()
        .zip(d)
        .map(|(&on, d)| if on { f64::from(d) } else { 0.0 })
        .collect();
    gray(img, values, FiltrationSpec::Erosion)
}

/// Manhattan distance from each voxel to the one-voxel shell surrounding
/// the grid.
fn border_distance(dims: Dims, p: [usize; 3]) -> u32 {
    (0..3).map(|k| (p[k] + 1).min(dims[k] - p[k]) as u32).min().unwrap()
}

/// Active voxels: distance to the nearest inactive voxel minus one.
/// Inactive voxels: minus the distance to the nearest active voxel.
/// The grid is treated as surrounded by a shell of inactive voxels.
pub fn apply_signed_distance(img: &BinaryImage3D) -> Result<GrayscaleImage3D> {
    if img.active_count() == 0 {
        return Err(Error::EmptyImage);
    }
    let dims = img.dims();
    let inactive: Vec<bool> = img.voxels().iter().map(|b| !b).collect();
    let to_inactive = l1_distance_transform(dims, &inactive);
    let to_active = l1_distance_transform(dims, img.voxels());
    let values = img
        .voxels()
        .iter()
        .enumerate()
        .map(|(i, &on)| {
            if on {
                let d = to_inactive[i].min(border_distance(dims, unravel(dims, i)));
                debug_assert_ne!(d, UNREACHED);
                f64::from(d) - 1.0
            } else {
                -f64::from(to_active[i])
            }
        })
        .collect();
    Ok(gray(img, values, FiltrationSpec::SignedDistance))
}
