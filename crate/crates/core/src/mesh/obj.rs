//! Wavefront OBJ: `v` and `f` records. Everything else is ignored.

use std::fmt::Write as _;

use super::{MeshError, TriangleMesh};
use crate::geometry::Point;

fn resolve_index(token: &str, vertex_count: usize, line: usize) -> Result<i64, MeshError> {
    let head = token.split('/').next().unwrap_or_default();
    let raw: i64 = head.parse().map_err(|_| MeshError::Malformed {
        line,
        message: format!("bad face index {token:?}"),
    })?;
    match raw {
        0 => Err(MeshError::Malformed {
            line,
            message: "face index 0 is not valid in OBJ".into(),
        }),
        r if r > 0 => Ok(r - 1),
        // Negative indices count back from the latest vertex.
        r => Ok(vertex_count as i64 + r),
    }
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();

    for (n, raw_line) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw_line.split('#').next().unwrap_or_default().trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| MeshError::Malformed {
                        line: line_no,
                        message: format!("bad vertex coordinate: {e}"),
                    })?;
                if coords.len() < 3 || coords.iter().any(|c| !c.is_finite()) {
                    return Err(MeshError::Malformed {
                        line: line_no,
                        message: "vertex needs three finite coordinates".into(),
                    });
                }
                vertices.push(Point::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<i64> = tokens
                    .map(|t| resolve_index(t, vertices.len(), line_no))
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(MeshError::Malformed {
                        line: line_no,
                        message: format!("face has {} vertices, need at least 3", idx.len()),
                    });
                }
                faces.push((line_no, idx));
            }
            _ => {}
        }
    }

    let mut triangles = Vec::new();
    for (line, idx) in faces {
        let checked: Vec<usize> = idx
            .iter()
            .map(|&i| {
                if i < 0 || i as usize >= vertices.len() {
                    Err(MeshError::IndexOutOfRange {
                        line,
                        index: i,
                        vertex_count: vertices.len(),
                    })
                } else {
                    Ok(i as usize)
                }
            })
            .collect::<Result<_, _>>()?;
        for w in 1..checked.len() - 1 {
            triangles.push([checked[0], checked[w], checked[w + 1]]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn to_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}
