use super::{GeometryError, Point};

const LEAF_SIZE: usize = 8;

/// Squared Euclidean distance, summed in x, y, z order.
#[inline]
pub fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Static 3D k-d tree with median splits.
///
/// The tree is an implicit layout over a permutation of point indices: the
/// node for the range `lo..hi` is stored at `mid = (lo + hi) / 2`, with the
/// left subtree in `lo..mid` and the right in `mid + 1..hi`. Ranges of at
/// most `LEAF_SIZE` points are scanned linearly. Immutable once built.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    order: Vec<usize>,
    split_axis: Vec<u8>,
}

impl KdTree {
    pub fn build(points: &[Point]) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyCloud);
        }
        let points: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut split_axis = vec![0u8; points.len()];
        Self::split(&points, &mut order, &mut split_axis);
        Ok(Self {
            points,
            order,
            split_axis,
        })
    }

    fn split(points: &[[f64; 3]], order: &mut [usize], axes: &mut [u8]) {
        let len = order.len();
        if len <= LEAF_SIZE {
            return;
        }
        // Split along the axis of widest spread.
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &i in order.iter() {
            for a in 0..3 {
                lo[a] = lo[a].min(points[i][a]);
                hi[a] = hi[a].max(points[i][a]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = len / 2;
        order.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        axes[mid] = axis as u8;
        let (left, rest) = order.split_at_mut(mid);
        let (left_axes, rest_axes) = axes.split_at_mut(mid);
        Self::split(points, left, left_axes);
        Self::split(points, &mut rest[1..], &mut rest_axes[1..]);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the nearest stored point and its squared distance.
    pub fn nearest(&self, query: &Point) -> (usize, f64) {
        let q = [query.x, query.y, query.z];
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, self.order.len(), &q, &mut best);
        best
    }

    /// Euclidean distance to the nearest stored point.
    pub fn nearest_distance(&self, query: &Point) -> f64 {
        self.nearest(query).1.sqrt()
    }

    fn search(&self, lo: usize, hi: usize, q: &[f64; 3], best: &mut (usize, f64)) {
        if hi - lo <= LEAF_SIZE {
            for &i in &self.order[lo..hi] {
                let d = squared_distance(&self.points[i], q);
                if d < best.1 {
                    *best = (i, d);
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let node = self.order[mid];
        let d = squared_distance(&self.points[node], q);
        if d < best.1 {
            *best = (node, d);
        }
        let axis = self.split_axis[mid] as usize;
        let diff = q[axis] - self.points[node][axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(near.0, near.1, q, best);
        if diff * diff <= best.1 {
            self.search(far.0, far.1, q, best);
        }
    }
}
