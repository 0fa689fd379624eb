//! The five reconstruction metrics and the per-pair scoring protocol.
//!
//! Scoring normalizes both clouds to the unit cube, aligns the prediction
//! onto the ground truth with ICP, and then computes F1@τ, voxel IoU and
//! Dice on a fixed grid, Chamfer distance (unsquared ℓ2) and EMD (optimal
//! one-to-one matching on subsampled clouds).

pub mod assignment;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    apply_transform, icp_align, normalize_unit_cube, subsample, GeometryError, IcpParams, KdTree, PointCloud,
};
use assignment::CostMatrix;

pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_GRID_SIZE: usize = 64;
pub const DEFAULT_EMD_CAP: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("occupancy grid is empty")]
    EmptyGrid,
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("invalid metric config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}

fn default_emd_cap() -> usize {
    DEFAULT_EMD_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_emd_cap")]
    pub emd_cap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub icp: IcpParams,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            grid_size: DEFAULT_GRID_SIZE,
            emd_cap: DEFAULT_EMD_CAP,
            seed: 0,
            icp: IcpParams::default(),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(MetricError::InvalidConfig(format!("tau must be > 0, got {}", self.tau)));
        }
        if self.grid_size < 2 {
            return Err(MetricError::InvalidConfig(format!(
                "grid_size must be >= 2, got {}",
                self.grid_size
            )));
        }
        if self.emd_cap < 1 {
            return Err(MetricError::InvalidConfig("emd_cap must be >= 1".into()));
        }
        self.icp.validate()?;
        Ok(())
    }
}

/// Occupied voxels of a `grid_size³` grid spanning `[-1, 1]³`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    grid_size: usize,
    occupied: BTreeSet<[usize; 3]>,
}

impl OccupancyGrid {
    pub fn new(grid_size: usize, occupied: BTreeSet<[usize; 3]>) -> Self {
        assert!(
            occupied.iter().all(|v| v.iter().all(|&c| c < grid_size)),
            "voxel index out of bounds"
        );
        Self { grid_size, occupied }
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn occupied(&self) -> &BTreeSet<[usize; 3]> {
        &self.occupied
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }
}

/// Per-pair scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub voxel_iou: f64,
    pub voxel_dice: f64,
    pub chamfer: f64,
    pub emd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn nn_distances(from: &PointCloud, to: &KdTree) -> Vec<f64> {
    from.points().iter().map(|p| to.nearest_distance(p)).collect()
}

fn fraction_within(distances: &[f64], tau: f64) -> f64 {
    distances.iter().filter(|&&d| d <= tau).count() as f64 / distances.len() as f64
}

fn harmonic(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn trees(pred: &PointCloud, gt: &PointCloud) -> Result<(KdTree, KdTree), MetricError> {
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricError::EmptyCloud);
    }
    Ok((KdTree::build(pred.points())?, KdTree::build(gt.points())?))
}

/// Precision, recall and F1 at distance threshold `tau`.
pub fn f1_at_tau(pred: &PointCloud, gt: &PointCloud, tau: f64) -> Result<F1Score, MetricError> {
    let (pred_tree, gt_tree) = trees(pred, gt)?;
    let precision = fraction_within(&nn_distances(pred, &gt_tree), tau);
    let recall = fraction_within(&nn_distances(gt, &pred_tree), tau);
    Ok(F1Score {
        precision,
        recall,
        f1: harmonic(precision, recall),
    })
}

/// Sum of the two directed mean nearest-neighbor distances.
pub fn chamfer(pred: &PointCloud, gt: &PointCloud) -> Result<f64, MetricError> {
    let (pred_tree, gt_tree) = trees(pred, gt)?;
    Ok(mean(&nn_distances(pred, &gt_tree)) + mean(&nn_distances(gt, &pred_tree)))
}

/// Maps each point to `clamp(floor((c + 1) / v), 0, grid_size - 1)` per
/// axis with voxel size `v = 2 / grid_size`.
pub fn voxelize(cloud: &PointCloud, grid_size: usize) -> OccupancyGrid {
    let voxel = 2.0 / grid_size as f64;
    let max_index = (grid_size - 1) as f64;
    let index = |c: f64| ((c + 1.0) / voxel).floor().clamp(0.0, max_index) as usize;
    let occupied = cloud
        .points()
        .iter()
        .map(|p| [index(p.x), index(p.y), index(p.z)])
        .collect();
    OccupancyGrid { grid_size, occupied }
}

/// Intersection-over-union and Dice of two occupancy sets.
pub fn voxel_overlap(pred: &OccupancyGrid, gt: &OccupancyGrid) -> Result<(f64, f64), MetricError> {
    if pred.grid_size != gt.grid_size {
        return Err(MetricError::GridMismatch(pred.grid_size, gt.grid_size));
    }
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricError::EmptyGrid);
    }
    let inter = pred.occupied.intersection(&gt.occupied).count() as f64;
    let (a, b) = (pred.len() as f64, gt.len() as f64);
    let union = a + b - inter;
    Ok((inter / union, 2.0 * inter / (a + b)))
}

/// Seed used to subsample both clouds before matching.
pub fn emd_subsample_seed(seed: u64) -> u64 {
    seed ^ 1
}

/// Mean cost of the minimum-cost one-to-one matching between the clouds
/// after subsampling both to `min(|pred|, |gt|, cap)` points.
///
/// Both clouds are subsampled with the same derived seed, so two clouds of
/// equal size keep the same index set.
pub fn emd(pred: &PointCloud, gt: &PointCloud, cap: usize, seed: u64) -> Result<f64, MetricError> {
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricError::EmptyCloud);
    }
    if cap == 0 {
        return Err(MetricError::InvalidConfig("emd_cap must be >= 1".into()));
    }
    let n = pred.len().min(gt.len()).min(cap);
    let sub_seed = emd_subsample_seed(seed);
    let a = subsample(pred, n, sub_seed);
    let b = subsample(gt, n, sub_seed);
    let (pa, pb) = (a.points(), b.points());
    let cost = CostMatrix::from_fn(n, n, |i, j| (pa[i] - pb[j]).norm());
    Ok(assignment::solve(&cost).total_cost / n as f64)
}

/// Full scoring protocol for one prediction against one ground truth.
pub fn evaluate_pair(pred: &PointCloud, gt: &PointCloud, cfg: &MetricConfig) -> Result<Scores, MetricError> {
    cfg.validate()?;
    if pred.is_empty() || gt.is_empty() {
        return Err(MetricError::EmptyCloud);
    }
    let pred_n = normalize_unit_cube(pred)?;
    let gt_n = normalize_unit_cube(gt)?;
    let transform = icp_align(&pred_n, &gt_n, &cfg.icp)?;
    let pred_a = apply_transform(&pred_n, &transform);

    let (pred_tree, gt_tree) = trees(&pred_a, &gt_n)?;
    let forward = nn_distances(&pred_a, &gt_tree);
    let backward = nn_distances(&gt_n, &pred_tree);
    let precision = fraction_within(&forward, cfg.tau);
    let recall = fraction_within(&backward, cfg.tau);

    let (voxel_iou, voxel_dice) = voxel_overlap(&voxelize(&pred_a, cfg.grid_size), &voxelize(&gt_n, cfg.grid_size))?;

    Ok(Scores {
        f1: harmonic(precision, recall),
        precision,
        recall,
        voxel_iou,
        voxel_dice,
        chamfer: mean(&forward) + mean(&backward),
        emd: emd(&pred_a, &gt_n, cfg.emd_cap, cfg.seed)?,
    })
}
