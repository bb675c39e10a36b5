//! Sublevel-set cubical persistence of 3D grayscale images.
//!
//! A `nx × ny × nz` image is viewed as the cubical complex on the cell grid
//! `(2nx+1) × (2ny+1) × (2nz+1)`: a cell with coordinates `(a, b, c)` has
//! dimension equal to the number of odd coordinates, and voxel `(i, j, k)`
//! is the 3-cube `(2i+1, 2j+1, 2k+1)`. Lower cells take the minimum
//! intensity of the voxels they bound.

mod complex;
mod diagram;
pub mod oracle;
mod reduce;

pub use complex::CubicalComplex;
pub use diagram::{PersistenceDiagram, PersistencePair};
pub use reduce::compute_persistence;

use crate::filtration::GrayscaleImage3D;

/// Builds the cubical complex of `img`.
pub fn build_complex(img: &GrayscaleImage3D) -> CubicalComplex {
    CubicalComplex::from_image(img)
}

/// Persistence diagram of the sublevel filtration of `img`.
pub fn image_persistence(img: &GrayscaleImage3D) -> PersistenceDiagram {
    compute_persistence(&build_complex(img))
}
