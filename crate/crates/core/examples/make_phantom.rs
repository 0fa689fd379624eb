//! Regenerates the synthetic phantom under `tests/data/phantom`.
//!
//! ```text
//! cargo run --example make_phantom [-- <out_dir>]
//! ```
//!
//! Each sample has an int16 scan, a uint8 mask and three predictions:
//! `exact` (analytic surface through the boundary voxel centers), `halfres`
//! (voxel-face mesh of the mask taken at every other voxel) and `planar`
//! (the exact mesh squashed along the slice normal).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Result;
use volbench::geometry::Point;
use volbench::mesh::{write_obj, TriangleMesh};
use volbench::nifti::{linear_index, write_nifti, DataType, Orientation, Volume};
use volbench::volume::Plane;

const GLOBAL_SEED: u64 = 7;
const SAMPLE_POINTS: usize = 20_000;
/// Keeps the reference assignment solver used for the golden file tractable.
const EMD_CAP: usize = 512;
const PLANAR_THICKNESS: f64 = 0.02;

enum Shape {
    /// Center and radius in mm.
    Sphere { center: [f64; 3], radius: f64 },
    /// Inclusive voxel index bounds.
    Block { lo: [usize; 3], hi: [usize; 3] },
}

struct Phantom {
    id: &'static str,
    dims: [usize; 3],
    spacing: [f64; 3],
    plane: Plane,
    shape: Shape,
}

impl Phantom {
    fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        let idx = [i, j, k];
        match &self.shape {
            Shape::Sphere { center, radius } => {
                let d2: f64 = (0..3)
                    .map(|a| (idx[a] as f64 * self.spacing[a] - center[a]).powi(2))
                    .sum();
                d2 <= radius * radius
            }
            Shape::Block { lo, hi } => (0..3).all(|a| idx[a] >= lo[a] && idx[a] <= hi[a]),
        }
    }

    fn bits(&self) -> Vec<bool> {
        let [nx, ny, nz] = self.dims;
        let mut bits = vec![false; nx * ny * nz];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    bits[linear_index(self.dims, i, j, k)] = self.contains(i, j, k);
                }
            }
        }
        bits
    }

    fn exact_mesh(&self) -> Result<TriangleMesh> {
        match &self.shape {
            Shape::Sphere { center, radius } => uv_sphere(*center, radius - 0.5, 48, 96),
            Shape::Block { lo, hi } => {
                let corner = |idx: &[usize; 3]| -> [f64; 3] {
                    [
                        idx[0] as f64 * self.spacing[0],
                        idx[1] as f64 * self.spacing[1],
                        idx[2] as f64 * self.spacing[2],
                    ]
                };
                cuboid(corner(lo), corner(hi))
            }
        }
    }

    /// Voxel-face mesh of the mask restricted to even indices, each coarse
    /// voxel spanning twice the original spacing.
    fn halfres_mesh(&self) -> Result<TriangleMesh> {
        let coarse = [0, 1, 2].map(|a| self.dims[a].div_ceil(2));
        let set = |c: [i64; 3]| -> bool {
            (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < coarse[a])
                && self.contains(2 * c[0] as usize, 2 * c[1] as usize, 2 * c[2] as usize)
        };
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for ck in 0..coarse[2] as i64 {
            for cj in 0..coarse[1] as i64 {
                for ci in 0..coarse[0] as i64 {
                    let c = [ci, cj, ck];
                    if !set(c) {
                        continue;
                    }
                    let center = [0, 1, 2].map(|a| 2.0 * c[a] as f64 * self.spacing[a]);
                    for axis in 0..3 {
                        for dir in [-1i64, 1] {
                            let mut n = c;
                            n[axis] += dir;
                            if set(n) {
                                continue;
                            }
                            push_face(&mut vertices, &mut triangles, center, self.spacing, axis, dir as f64);
                        }
                    }
                }
            }
        }
        Ok(TriangleMesh::new(vertices, triangles)?)
    }

    /// Exact mesh compressed along the index axis normal to the slice plane.
    fn planar_mesh(&self) -> Result<TriangleMesh> {
        let exact = self.exact_mesh()?;
        let axis = match self.plane {
            Plane::Coronal => 1,
            Plane::Axial => 2,
        };
        let mid = exact.vertices().iter().map(|p| p[axis]).sum::<f64>() / exact.vertices().len() as f64;
        let vertices = exact
            .vertices()
            .iter()
            .map(|p| {
                let mut q = *p;
                q[axis] = mid + PLANAR_THICKNESS * (p[axis] - mid);
                q
            })
            .collect();
        Ok(TriangleMesh::new(vertices, exact.triangles().to_vec())?)
    }

    fn scan(&self) -> Vec<f64> {
        let [nx, ny, nz] = self.dims;
        let mut data = vec![0.0; nx * ny * nz];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    data[linear_index(self.dims, i, j, k)] = if self.contains(i, j, k) {
                        (100 + (i + 2 * j + 3 * k) % 50) as f64
                    } else {
                        10.0
                    };
                }
            }
        }
        data
    }
}

fn push_face(
    vertices: &mut Vec<Point>,
    triangles: &mut Vec<[usize; 3]>,
    center: [f64; 3],
    spacing: [f64; 3],
    axis: usize,
    dir: f64,
) {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let base = vertices.len();
    for (su, sv) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
        let mut p = center;
        p[axis] += dir * spacing[axis];
        p[u] += su * spacing[u];
        p[v] += sv * spacing[v];
        vertices.push(Point::new(p[0], p[1], p[2]));
    }
    triangles.push([base, base + 1, base + 2]);
    triangles.push([base, base + 2, base + 3]);
}

fn uv_sphere(center: [f64; 3], radius: f64, stacks: usize, slices: usize) -> Result<TriangleMesh> {
    let mut vertices = vec![Point::new(center[0], center[1], center[2] + radius)];
    for s in 1..stacks {
        let theta = PI * s as f64 / stacks as f64;
        for l in 0..slices {
            let phi = 2.0 * PI * l as f64 / slices as f64;
            vertices.push(Point::new(
                center[0] + radius * theta.sin() * phi.cos(),
                center[1] + radius * theta.sin() * phi.sin(),
                center[2] + radius * theta.cos(),
            ));
        }
    }
    vertices.push(Point::new(center[0], center[1], center[2] - radius));
    let south = vertices.len() - 1;
    let ring = |s: usize, l: usize| 1 + (s - 1) * slices + l % slices;

    let mut triangles = Vec::new();
    for l in 0..slices {
        triangles.push([0, ring(1, l), ring(1, l + 1)]);
        triangles.push([south, ring(stacks - 1, l + 1), ring(stacks - 1, l)]);
    }
    for s in 1..stacks - 1 {
        for l in 0..slices {
            triangles.push([ring(s, l), ring(s + 1, l), ring(s + 1, l + 1)]);
            triangles.push([ring(s, l), ring(s + 1, l + 1), ring(s, l + 1)]);
        }
    }
    Ok(TriangleMesh::new(vertices, triangles)?)
}

fn cuboid(lo: [f64; 3], hi: [f64; 3]) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    for &z in &[lo[2], hi[2]] {
        for &(x, y) in &[(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])] {
            vertices.push(Point::new(x, y, z));
        }
    }
    let quads = [
        [0, 3, 2, 1],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [1, 2, 6, 5],
        [2, 3, 7, 6],
        [3, 0, 4, 7],
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    Ok(TriangleMesh::new(vertices, triangles)?)
}

fn phantoms() -> Vec<Phantom> {
    vec![
        Phantom {
            id: "sphere",
            dims: [48, 48, 48],
            spacing: [1.0, 1.0, 1.0],
            plane: Plane::Coronal,
            shape: Shape::Sphere {
                center: [24.0, 24.0, 24.0],
                radius: 18.0,
            },
        },
        Phantom {
            id: "sphere_aniso",
            dims: [48, 48, 24],
            spacing: [1.0, 1.0, 2.0],
            plane: Plane::Axial,
            shape: Shape::Sphere {
                center: [24.0, 24.0, 24.0],
                radius: 18.0,
            },
        },
        Phantom {
            id: "box",
            dims: [40, 40, 40],
            spacing: [1.0, 1.0, 1.0],
            plane: Plane::Coronal,
            shape: Shape::Block {
                lo: [8, 10, 6],
                hi: [31, 29, 33],
            },
        },
        // Lies entirely away from the coronal midpoint (j = 12): skipped.
        Phantom {
            id: "offcenter",
            dims: [24, 24, 24],
            spacing: [1.0, 1.0, 1.0],
            plane: Plane::Coronal,
            shape: Shape::Sphere {
                center: [12.0, 4.0, 12.0],
                radius: 2.0,
            },
        },
    ]
}

fn write_sample(p: &Phantom, dir: &Path) -> Result<serde_json::Value> {
    let orientation = Some(Orientation::RAS);
    let mask = Volume::new(p.dims, p.spacing, p.bits().iter().map(|&b| b as u8 as f64).collect())?
        .with_orientation(orientation);
    let scan = Volume::new(p.dims, p.spacing, p.scan())?.with_orientation(orientation);
    let scan_name = format!("{}_scan.nii.gz", p.id);
    let mask_name = format!("{}_mask.nii.gz", p.id);
    write_nifti(dir.join(&scan_name), &scan, DataType::Int16)?;
    write_nifti(dir.join(&mask_name), &mask, DataType::UInt8)?;

    let mut predictions = BTreeMap::new();
    for (model, mesh) in [
        ("exact", p.exact_mesh()?),
        ("halfres", p.halfres_mesh()?),
        ("planar", p.planar_mesh()?),
    ] {
        let name = format!("{}_{model}.obj", p.id);
        write_obj(dir.join(&name), &mesh)?;
        predictions.insert(model.to_string(), name);
    }
    Ok(serde_json::json!({
        "id": p.id,
        "dataset": "phantom",
        "scan_path": scan_name,
        "mask_path": mask_name,
        "plane": p.plane.as_str(),
        "predictions": predictions,
    }))
}

fn main() -> Result<()> {
    let dir: PathBuf = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/phantom"));
    std::fs::create_dir_all(&dir)?;

    let samples = phantoms()
        .iter()
        .map(|p| write_sample(p, &dir))
        .collect::<Result<Vec<_>>>()?;
    let manifest = serde_json::json!({
        "schema_version": 1,
        "global_seed": GLOBAL_SEED,
        "config": {
            "sample_points": SAMPLE_POINTS,
            "emd_cap": EMD_CAP,
            "export_slices": true,
        },
        "samples": samples,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    println!("phantom written to {}", dir.display());
    Ok(())
}
