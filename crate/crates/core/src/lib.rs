//! Benchmark toolkit for single-slice-to-3D medical reconstruction.
//!
//! Ground truth is the boundary shell of a NIfTI segmentation mask; predictions
//! are meshes or point clouds produced by an external model. Both are
//! normalized, rigidly aligned with ICP and scored with F1@τ, voxel IoU/Dice,
//! Chamfer distance and EMD.

pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod metrics;
pub mod nifti;
pub mod volume;
