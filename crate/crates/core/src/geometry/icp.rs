//! Point-to-point ICP with an identity fallback.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, KdTree, Point, PointCloud};

/// Rotation followed by translation: `p -> R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        Point::from(self.rotation * p.coords + self.translation)
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn after(&self, first: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * first.rotation,
            translation: self.rotation * first.translation + self.translation,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    /// Largest deviation of `RᵀR` from `I`, and of `det R` from 1.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        gram.amax().max((self.rotation.determinant() - 1.0).abs())
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

fn default_max_correspondence_distance() -> f64 {
    0.02
}

fn default_max_iterations() -> usize {
    50
}

fn default_rmse_convergence_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcpParams {
    #[serde(default = "default_max_correspondence_distance")]
    pub max_correspondence_distance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_rmse_convergence_tol")]
    pub rmse_convergence_tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_correspondence_distance: default_max_correspondence_distance(),
            max_iterations: default_max_iterations(),
            rmse_convergence_tol: default_rmse_convergence_tol(),
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.max_correspondence_distance.is_finite() && self.max_correspondence_distance > 0.0) {
            return Err(GeometryError::InvalidParams(format!(
                "max_correspondence_distance must be > 0, got {}",
                self.max_correspondence_distance
            )));
        }
        if self.max_iterations == 0 {
            return Err(GeometryError::InvalidParams("max_iterations must be positive".into()));
        }
        if self.rmse_convergence_tol.is_nan() || self.rmse_convergence_tol < 0.0 {
            return Err(GeometryError::InvalidParams(format!(
                "rmse_convergence_tol must be >= 0, got {}",
                self.rmse_convergence_tol
            )));
        }
        Ok(())
    }
}

struct Correspondences {
    pairs: Vec<(Point, Point)>,
    sum_sq: f64,
}

impl Correspondences {
    fn rmse(&self) -> f64 {
        if self.pairs.is_empty() {
            0.0
        } else {
            (self.sum_sq / self.pairs.len() as f64).sqrt()
        }
    }
}

fn correspond(
    source: &[Point],
    transform: &RigidTransform,
    target: &[Point],
    tree: &KdTree,
    threshold: f64,
) -> Correspondences {
    let max_sq = threshold * threshold;
    let mut pairs = Vec::new();
    let mut sum_sq = 0.0;
    for p in source {
        let moved = transform.apply(p);
        let (idx, d2) = tree.nearest(&moved);
        if d2 <= max_sq {
            pairs.push((moved, target[idx]));
            sum_sq += d2;
        }
    }
    Correspondences { pairs, sum_sq }
}

/// Root-mean-square nearest-neighbor distance over the source points that
/// lie within `threshold` of the target; 0 when there are none.
pub fn inlier_rmse(source: &PointCloud, target: &PointCloud, threshold: f64) -> Result<f64, GeometryError> {
    let tree = KdTree::build(target.points())?;
    Ok(correspond(
        source.points(),
        &RigidTransform::identity(),
        target.points(),
        &tree,
        threshold,
    )
    .rmse())
}

/// Least-squares rotation and translation taking the first point of each
/// pair onto the second (SVD of the cross-covariance, reflection-corrected).
fn best_fit(pairs: &[(Point, Point)]) -> RigidTransform {
    let n = pairs.len() as f64;
    let (src_sum, dst_sum) = pairs
        .iter()
        .fold((Vector3::zeros(), Vector3::zeros()), |(a, b), (s, d)| {
            (a + s.coords, b + d.coords)
        });
    let src_c = src_sum / n;
    let dst_c = dst_sum / n;
    let mut h = Matrix3::zeros();
    for (s, d) in pairs {
        h += (s.coords - src_c) * (d.coords - dst_c).transpose();
    }
    let svd = h.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return RigidTransform::identity();
    };
    let v = v_t.transpose();
    let mut correction = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        correction[(2, 2)] = -1.0;
    }
    let rotation = v * correction * u.transpose();
    RigidTransform::new(rotation, dst_c - rotation * src_c)
}

/// Aligns `source` onto `target`.
///
/// Each iteration pairs every transformed source point with its nearest
/// target point, keeps pairs within `max_correspondence_distance`, and
/// composes the best-fit rigid motion for those pairs. Iteration stops after
/// `max_iterations` or once the inlier RMSE changes by less than
/// `rmse_convergence_tol`. The identity is returned if no iteration found at
/// least 3 pairs or if the result's inlier RMSE is worse than the identity's.
pub fn icp_align(
    source: &PointCloud,
    target: &PointCloud,
    params: &IcpParams,
) -> Result<RigidTransform, GeometryError> {
    params.validate()?;
    if source.len() < 3 || target.len() < 3 {
        return Err(GeometryError::TooFewPoints {
            source_len: source.len(),
            target_len: target.len(),
        });
    }
    let tree = KdTree::build(target.points())?;
    let threshold = params.max_correspondence_distance;
    let src = source.points();
    let tgt = target.points();

    let identity = RigidTransform::identity();
    let identity_rmse = correspond(src, &identity, tgt, &tree, threshold).rmse();

    let mut current = identity;
    let mut previous_rmse: Option<f64> = None;
    let mut updated = false;
    for _ in 0..params.max_iterations {
        let corr = correspond(src, &current, tgt, &tree, threshold);
        if corr.pairs.len() < 3 {
            break;
        }
        let rmse = corr.rmse();
        if let Some(prev) = previous_rmse {
            if (prev - rmse).abs() < params.rmse_convergence_tol {
                break;
            }
        }
        previous_rmse = Some(rmse);
        current = best_fit(&corr.pairs).after(&current);
        updated = true;
    }

    if !updated {
        return Ok(identity);
    }
    let final_rmse = correspond(src, &current, tgt, &tree, threshold).rmse();
    if final_rmse > identity_rmse {
        return Ok(identity);
    }
    Ok(current)
}
