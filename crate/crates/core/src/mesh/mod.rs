//! Loading externally produced reconstructions and turning them into point
//! clouds.

pub mod obj;
pub mod ply;

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Frame, GeometryError, Point, PointCloud};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown mesh extension for {0} (expected .obj or .ply)")]
    UnknownExtension(PathBuf),
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("face index {index} out of range for {vertex_count} vertices (record {line})")]
    IndexOutOfRange {
        line: usize,
        index: i64,
        vertex_count: usize,
    },
    #[error("bad PLY header: {0}")]
    BadPlyHeader(String),
    #[error("bad PLY body: {0}")]
    BadPlyBody(String),
    #[error("big-endian binary PLY is not supported")]
    BigEndianPly,
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("mesh has zero total surface area")]
    ZeroArea,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        for (n, t) in triangles.iter().enumerate() {
            if let Some(&bad) = t.iter().find(|&&i| i >= vertices.len()) {
                return Err(MeshError::IndexOutOfRange {
                    line: n,
                    index: bad as i64,
                    vertex_count: vertices.len(),
                });
            }
        }
        if let Some(index) = vertices
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()))
        {
            return Err(GeometryError::NonFinite { index }.into());
        }
        Ok(Self { vertices, triangles })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    fn corners(&self, t: &[usize; 3]) -> (Point, Point, Point) {
        (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
    }

    pub fn triangle_area(&self, index: usize) -> f64 {
        let (a, b, c) = self.corners(&self.triangles[index]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn vertex_cloud(&self) -> PointCloud {
        PointCloud::new(self.vertices.clone(), Frame::PhysicalMm).expect("vertices validated finite")
    }
}

/// A loaded reconstruction: either a surface mesh or a bare point cloud.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Mesh(TriangleMesh),
    Cloud(PointCloud),
}

/// Loads `.obj` or `.ply` by extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Geometry, MeshError> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let read = || {
        fs::read(path).map_err(|source| MeshError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    match ext.as_deref() {
        Some("obj") => {
            let bytes = read()?;
            let text = String::from_utf8_lossy(&bytes);
            Ok(Geometry::Mesh(obj::parse_obj(&text)?))
        }
        Some("ply") => ply::parse_ply(&read()?),
        _ => Err(MeshError::UnknownExtension(path.to_path_buf())),
    }
}

/// How a predicted mesh becomes a point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// Area-weighted surface sampling.
    #[default]
    Surface,
    /// Use the mesh vertices as-is.
    Vertices,
}

/// Samples `n` points i.i.d. with probability proportional to triangle area,
/// each at uniform barycentric coordinates inside its triangle.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud, MeshError> {
    sample_surface_with_faces(mesh, n, seed).map(|(cloud, _)| cloud)
}

/// Like [`sample_surface`], also returning the source triangle of each point.
pub fn sample_surface_with_faces(
    mesh: &TriangleMesh,
    n: usize,
    seed: u64,
) -> Result<(PointCloud, Vec<usize>), MeshError> {
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(MeshError::ZeroArea);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut faces = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.gen::<f64>() * total;
        // First face whose cumulative area exceeds the target; zero-area
        // faces never qualify. The clamp covers rounding at the top end.
        let face = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let (a, b, c) = mesh.corners(&mesh.triangles[face]);
        let mut u: f64 = rng.gen();
        let mut v: f64 = rng.gen();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        let offset: Vector3<f64> = (b - a) * u + (c - a) * v;
        points.push(a + offset);
        faces.push(face);
    }
    Ok((PointCloud::new(points, Frame::PhysicalMm)?, faces))
}

/// Converts loaded geometry to the cloud that gets scored.
pub fn prediction_cloud(
    geometry: &Geometry,
    mode: PredictionMode,
    n: usize,
    seed: u64,
) -> Result<PointCloud, MeshError> {
    match (geometry, mode) {
        (Geometry::Cloud(c), _) => Ok(c.clone()),
        (Geometry::Mesh(m), PredictionMode::Surface) => sample_surface(m, n, seed),
        (Geometry::Mesh(m), PredictionMode::Vertices) => Ok(m.vertex_cloud()),
    }
}

pub fn write_obj(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<(), MeshError> {
    let path = path.as_ref();
    fs::write(path, obj::to_obj(mesh)).map_err(|source| MeshError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_ply_points(path: impl AsRef<Path>, cloud: &PointCloud) -> Result<(), MeshError> {
    let path = path.as_ref();
    fs::write(path, ply::points_to_ply(cloud)).map_err(|source| MeshError::Write {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point::new(a[0], a[1], a[2]),
                Point::new(b[0], b[1], b[2]),
                Point::new(c[0], c[1], c[2]),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn samples_lie_on_the_triangle_plane() {
        let mesh = tri([1.0, 0.0, 0.0], [0.0, 2.0, 0.5], [-1.0, 0.3, 3.0]);
        let (a, b, c) = mesh.corners(&mesh.triangles[0]);
        let normal = (b - a).cross(&(c - a)).normalize();
        let cloud = sample_surface(&mesh, 3, 11).unwrap();
        assert_eq!(cloud.len(), 3);
        for p in cloud.points() {
            assert!(normal.dot(&(p - a)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_mesh_has_no_area() {
        let mesh = tri([0.0; 3], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]);
        assert!(matches!(sample_surface(&mesh, 10, 0), Err(MeshError::ZeroArea)));
    }

    #[test]
    fn area_weighting() {
        // Areas 3 and 1.
        let mesh = TriangleMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(3.0, 0.0, 0.0),
                Point::new(0.0, 2.0, 0.0),
                Point::new(10.0, 0.0, 0.0),
                Point::new(11.0, 0.0, 0.0),
                Point::new(10.0, 2.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert_eq!(mesh.triangle_area(0), 3.0);
        assert_eq!(mesh.triangle_area(1), 1.0);
        let n = 4000;
        let (_, faces) = sample_surface_with_faces(&mesh, n, 2024).unwrap();
        let first = faces.iter().filter(|&&f| f == 0).count() as f64;
        let sigma = (n as f64 * 0.75 * 0.25).sqrt();
        assert!((first - 3000.0).abs() <= 3.0 * sigma, "count {first}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let mesh = tri([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert_eq!(
            sample_surface(&mesh, 50, 5).unwrap(),
            sample_surface(&mesh, 50, 5).unwrap()
        );
        assert_ne!(
            sample_surface(&mesh, 50, 5).unwrap(),
            sample_surface(&mesh, 50, 6).unwrap()
        );
    }

    #[test]
    fn unknown_extension() {
        assert!(matches!(load_mesh("model.glb"), Err(MeshError::UnknownExtension(_))));
    }

    #[test]
    fn vertex_mode_uses_vertices() {
        let mesh = tri([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let cloud = prediction_cloud(&Geometry::Mesh(mesh), PredictionMode::Vertices, 100, 0).unwrap();
        assert_eq!(cloud.len(), 3);
    }

    #[test]
    fn rejects_out_of_range_triangles() {
        assert!(matches!(
            TriangleMesh::new(vec![Point::origin()], vec![[0, 0, 1]]),
            Err(MeshError::IndexOutOfRange { index: 1, .. })
        ));
    }
}
