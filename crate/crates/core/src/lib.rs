//! Topological feature extraction and classification for 3D point clouds.
//!
//! The pipeline voxelizes a cloud into a binary occupancy grid, turns the
//! grid into a bank of grayscale images (height, radial, density, dilation,
//! erosion, signed distance), computes the cubical persistence diagram of
//! each image, and summarizes every diagram as 36 numbers: persistent
//! entropy plus Wasserstein, bottleneck, Betti-curve, landscape and heat
//! amplitudes for H0, H1 and H2. The concatenated vectors feed a small
//! 1D convolutional network.

pub mod classifier;
pub mod config;
pub mod corrupt;
pub mod cubical;
pub mod error;
pub mod features;
pub mod filtration;
pub mod metrics;
pub mod pc_io;
pub mod vectorize;
pub mod voxel;

pub use error::{Error, Result};
