//! Point clouds and the alignment machinery used before scoring.

mod icp;
mod kdtree;

pub use icp::{icp_align, inlier_rmse, IcpParams, RigidTransform};
pub use kdtree::KdTree;

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Point3<f64>;

/// Scale below which a cloud is treated as a single point.
pub const DEGENERATE_SCALE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("ICP needs at least 3 points per cloud, got {source_len} and {target_len}")]
    TooFewPoints { source_len: usize, target_len: usize },
    #[error("invalid ICP parameters: {0}")]
    InvalidParams(String),
}

/// Coordinate frame a cloud is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    PhysicalMm,
    Normalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point>,
    frame: Frame,
}

impl PointCloud {
    pub fn new(points: Vec<Point>, frame: Frame) -> Result<Self, GeometryError> {
        if let Some(index) = points
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self { points, frame })
    }

    pub fn from_xyz(coords: &[[f64; 3]], frame: Frame) -> Result<Self, GeometryError> {
        Self::new(coords.iter().map(|c| Point::new(c[0], c[1], c[2])).collect(), frame)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn centroid(&self) -> Option<Point> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Some(Point::from(sum / self.points.len() as f64))
    }
}

/// Centers a cloud at its centroid and divides by the largest absolute
/// centered coordinate, so the result fits in `[-1, 1]^3`.
pub fn normalize_unit_cube(cloud: &PointCloud) -> Result<PointCloud, GeometryError> {
    let centroid = cloud.centroid().ok_or(GeometryError::EmptyCloud)?;
    let centered: Vec<Vector3<f64>> = cloud.points.iter().map(|p| p - centroid).collect();
    let scale = centered.iter().map(|v| v.amax()).fold(0.0_f64, f64::max);
    let points = if scale < DEGENERATE_SCALE {
        vec![Point::origin(); centered.len()]
    } else {
        centered.into_iter().map(|v| Point::from(v / scale)).collect()
    };
    Ok(PointCloud {
        points,
        frame: Frame::Normalized,
    })
}

pub fn apply_transform(cloud: &PointCloud, t: &RigidTransform) -> PointCloud {
    PointCloud {
        points: cloud.points.iter().map(|p| t.apply(p)).collect(),
        frame: cloud.frame,
    }
}

/// Draws `n` points uniformly without replacement.
///
/// The generator is ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with `seed`
/// through `SeedableRng::seed_from_u64`; indices come from
/// `rand::seq::index::sample`. Clouds with at most `n` points are returned
/// unchanged.
pub fn subsample(cloud: &PointCloud, n: usize, seed: u64) -> PointCloud {
    if cloud.len() <= n {
        return cloud.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, cloud.len(), n);
    PointCloud {
        points: picked.iter().map(|i| cloud.points[i]).collect(),
        frame: cloud.frame,
    }
}
