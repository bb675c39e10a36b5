//! Binary occupancy grids.
//!
//! The grid is anchored at the componentwise minimum of the cloud, so the
//! occupancy pattern is unaffected by translating the cloud.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pc_io::{Point3, PointCloud};

pub const BINARY_MAGIC: &[u8; 4] = b"TBV1";
pub const GRAY_MAGIC: &[u8; 4] = b"TGV1";

/// Grid dimensions `(nx, ny, nz)`; storage is x-fastest.
pub type Dims = [usize; 3];

#[inline]
pub fn linear_index(dims: Dims, [x, y, z]: [usize; 3]) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

#[inline]
pub fn unravel(dims: Dims, i: usize) -> [usize; 3] {
    [i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])]
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinaryImage3D {
    dims: Dims,
    voxels: Vec<bool>,
    pub origin: Point3,
    pub voxel_size: f64,
}

impl BinaryImage3D {
    pub fn new(dims: Dims, voxels: Vec<bool>) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        if dims.contains(&0) {
            return Err(Error::Invalid(format!("zero dimension in {dims:?}")));
        }
        if voxels.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: voxels.len(),
            });
        }
        Ok(Self {
            dims,
            voxels,
            origin: [0.0; 3],
            voxel_size: 1.0,
        })
    }

    /// Builds an image from a predicate over voxel indices.
    pub fn from_fn(dims: Dims, f: impl Fn([usize; 3]) -> bool) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        Self::new(dims, (0..n).map(|i| f(unravel(dims, i))).collect())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    pub fn voxels(&self) -> &[bool] {
        &self.voxels
    }

    pub fn get(&self, idx: [usize; 3]) -> bool {
        self.voxels[linear_index(self.dims, idx)]
    }

    pub fn active_count(&self) -> usize {
        self.voxels.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            voxels: self.voxels.iter().map(|b| !b).collect(),
            ..self.clone()
        }
    }
}

/// Maps every point to `floor((p - origin) / voxel_size)`, clamping points
/// on the max face into the last cell.
pub fn voxelize(cloud: &PointCloud, voxel_size: f64) -> Result<BinaryImage3D> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::Invalid(format!("voxel size must be positive, got {voxel_size}")));
    }
    if cloud.is_empty() {
        return Err(Error::Invalid("point cloud has no points".into()));
    }
    if cloud.points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::Invalid("point cloud has non-finite coordinates".into()));
    }
    let (lo, hi) = cloud.bounds();
    let mut dims = [1usize; 3];
    for k in 0..3 {
        dims[k] = (((hi[k] - lo[k]) / voxel_size).ceil() as usize).max(1);
    }
    let mut voxels = vec![false; dims.iter().product()];
    for p in &cloud.points {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let f = ((p[k] - lo[k]) / voxel_size).floor();
            idx[k] = (f.max(0.0) as usize).min(dims[k] - 1);
        }
        voxels[linear_index(dims, idx)] = true;
    }
    Ok(BinaryImage3D {
        dims,
        voxels,
        origin: lo,
        voxel_size,
    })
}

fn write_header(buf: &mut Vec<u8>, magic: &[u8; 4], dims: Dims) -> Result<()> {
    buf.extend_from_slice(magic);
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::Invalid(format!("dimension {d} exceeds u32")))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    Ok(())
}

fn read_header<'a>(bytes: &'a [u8], magic: &'static [u8; 4]) -> Result<(Dims, &'a [u8])> {
    if bytes.len() < 16 || &bytes[..4] != magic {
        return Err(Error::BadMagic {
            expected: std::str::from_utf8(magic).unwrap_or("?"),
        });
    }
    let mut dims = [0usize; 3];
    for (k, d) in dims.iter_mut().enumerate() {
        let off = 4 + 4 * k;
        *d = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    }
    Ok((dims, &bytes[16..]))
}

pub fn encode_binary_image(img: &BinaryImage3D) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(16 + img.len());
    write_header(&mut buf, BINARY_MAGIC, img.dims)?;
    buf.extend(img.voxels.iter().map(|&b| b as u8));
    Ok(buf)
}

/// Decodes the `TBV1` volume format. Origin and voxel size are set to
/// `(0,0,0)` and `1`.
pub fn decode_binary_image(bytes: &[u8]) -> Result<BinaryImage3D> {
    let (dims, payload) = read_header(bytes, BINARY_MAGIC)?;
    let expected = dims.iter().product::<usize>();
    if payload.len() != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len(),
        });
    }
    let voxels = payload
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Corrupt(format!("voxel byte {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let img = BinaryImage3D::new(dims, voxels)?;
    if img.active_count() == 0 {
        return Err(Error::EmptyImage);
    }
    Ok(img)
}

pub fn load_binary_image(path: impl AsRef<Path>) -> Result<BinaryImage3D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_binary_image(&bytes)
}

pub fn save_binary_image(path: impl AsRef<Path>, img: &BinaryImage3D) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_binary_image(img)?).map_err(|e| Error::io(path, e))
}

/// Writes a grayscale volume as `TGV1`: the binary header followed by
/// little-endian `f64` values.
pub fn save_gray_volume(path: impl AsRef<Path>, dims: Dims, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(16 + 8 * values.len());
    write_header(&mut buf, GRAY_MAGIC, dims)?;
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_gray_volume(path: impl AsRef<Path>) -> Result<(Dims, Vec<f64>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dims, payload) = read_header(&bytes, GRAY_MAGIC)?;
    let expected = dims.iter().product::<usize>();
    if payload.len() != 8 * expected {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len() / 8,
        });
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, values))
}
