//! PLY 1.0 reader (ascii, binary_little_endian) and an ascii point writer.

use std::fmt::Write as _;
use std::io::Cursor;

use byteorder::{LittleEndian, ReadBytesExt};

use super::{Geometry, MeshError, TriangleMesh};
use crate::geometry::{Frame, Point, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn read_le(self, r: &mut Cursor<&[u8]>) -> std::io::Result<f64> {
        Ok(match self {
            Self::I8 => r.read_i8()? as f64,
            Self::U8 => r.read_u8()? as f64,
            Self::I16 => r.read_i16::<LittleEndian>()? as f64,
            Self::U16 => r.read_u16::<LittleEndian>()? as f64,
            Self::I32 => r.read_i32::<LittleEndian>()? as f64,
            Self::U32 => r.read_u32::<LittleEndian>()? as f64,
            Self::F32 => r.read_f32::<LittleEndian>()? as f64,
            Self::F64 => r.read_f64::<LittleEndian>()?,
        })
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

fn header_err(message: impl Into<String>) -> MeshError {
    MeshError::BadPlyHeader(message.into())
}

fn parse_header(text: &str) -> Result<(Format, Vec<Element>), MeshError> {
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(header_err("missing 'ply' signature"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => format = Some(Format::Ascii),
            ["format", "binary_little_endian", _] => format = Some(Format::BinaryLe),
            ["format", "binary_big_endian", _] => return Err(MeshError::BigEndianPly),
            ["format", ..] => return Err(header_err(format!("unknown format line {line:?}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| header_err(format!("bad element count {count:?}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err("property before any element"))?;
                element.properties.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(count).ok_or_else(|| header_err(format!("bad type {count:?}")))?,
                    item: Scalar::parse(item).ok_or_else(|| header_err(format!("bad type {item:?}")))?,
                });
            }
            ["property", ty, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| header_err("property before any element"))?;
                element.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| header_err(format!("bad type {ty:?}")))?,
                });
            }
            ["end_header"] => break,
            _ => return Err(header_err(format!("unexpected header line {line:?}"))),
        }
    }
    let format = format.ok_or_else(|| header_err("missing format line"))?;
    Ok((format, elements))
}

/// One element instance: scalar values in property order, lists flattened
/// per property.
type Row = Vec<Vec<f64>>;

trait RowSource {
    fn scalar(&mut self, ty: Scalar) -> Result<f64, MeshError>;
}

struct AsciiSource<'a> {
    tokens: std::str::SplitWhitespace<'a>,
}

impl RowSource for AsciiSource<'_> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64, MeshError> {
        let tok = self
            .tokens
            .next()
            .ok_or_else(|| MeshError::Truncated("ascii PLY body ended early".into()))?;
        let bad = |_| MeshError::BadPlyBody(format!("bad number {tok:?}"));
        // Match binary semantics: a `float` property holds an f32.
        match ty {
            Scalar::F32 => tok.parse::<f32>().map(f64::from).map_err(bad),
            _ => tok.parse::<f64>().map_err(bad),
        }
    }
}

struct BinarySource<'a> {
    cursor: Cursor<&'a [u8]>,
}

impl RowSource for BinarySource<'_> {
    fn scalar(&mut self, ty: Scalar) -> Result<f64, MeshError> {
        ty.read_le(&mut self.cursor)
            .map_err(|_| MeshError::Truncated("binary PLY body ended early".into()))
    }
}

fn read_row(src: &mut dyn RowSource, element: &Element) -> Result<Row, MeshError> {
    element
        .properties
        .iter()
        .map(|p| match p {
            Property::Scalar { ty, .. } => Ok(vec![src.scalar(*ty)?]),
            Property::List { count, item, .. } => {
                let n = src.scalar(*count)?;
                if n < 0.0 || n.fract() != 0.0 {
                    return Err(MeshError::BadPlyBody(format!("bad list length {n}")));
                }
                (0..n as usize).map(|_| src.scalar(*item)).collect()
            }
        })
        .collect()
}

fn split_header(bytes: &[u8]) -> Result<(&str, &[u8]), MeshError> {
    const MARKER: &[u8] = b"end_header";
    let pos = bytes
        .windows(MARKER.len())
        .position(|w| w == MARKER)
        .ok_or_else(|| header_err("missing end_header"))?;
    let newline = bytes[pos..]
        .iter()
        .position(|&b| b == b'\n')
        .map(|p| pos + p + 1)
        .unwrap_or(bytes.len());
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| header_err("header is not utf-8"))?;
    Ok((header, &bytes[newline..]))
}

pub fn parse_ply(bytes: &[u8]) -> Result<Geometry, MeshError> {
    let (header, body) = split_header(bytes)?;
    let (format, elements) = parse_header(header)?;

    let ascii_text;
    let mut ascii;
    let mut binary;
    let src: &mut dyn RowSource = match format {
        Format::Ascii => {
            ascii_text =
                std::str::from_utf8(body).map_err(|_| MeshError::BadPlyBody("ascii body is not utf-8".into()))?;
            ascii = AsciiSource {
                tokens: ascii_text.split_whitespace(),
            };
            &mut ascii
        }
        Format::BinaryLe => {
            binary = BinarySource {
                cursor: Cursor::new(body),
            };
            &mut binary
        }
    };

    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<Vec<f64>> = Vec::new();
    let mut saw_faces = false;
    for element in &elements {
        match element.name.as_str() {
            "vertex" => {
                let find = |axis: &str| {
                    element
                        .properties
                        .iter()
                        .position(|p| matches!(p, Property::Scalar { .. }) && p.name() == axis)
                        .ok_or_else(|| header_err(format!("vertex element lacks scalar property {axis}")))
                };
                let (ix, iy, iz) = (find("x")?, find("y")?, find("z")?);
                vertices.reserve(element.count);
                for _ in 0..element.count {
                    let row = read_row(src, element)?;
                    vertices.push(Point::new(row[ix][0], row[iy][0], row[iz][0]));
                }
            }
            "face" => {
                let li = element
                    .properties
                    .iter()
                    .position(|p| {
                        matches!(p, Property::List { .. }) && matches!(p.name(), "vertex_indices" | "vertex_index")
                    })
                    .ok_or_else(|| header_err("face element lacks a vertex_indices list"))?;
                saw_faces = element.count > 0;
                for _ in 0..element.count {
                    let mut row = read_row(src, element)?;
                    faces.push(std::mem::take(&mut row[li]));
                }
            }
            _ => {
                for _ in 0..element.count {
                    read_row(src, element)?;
                }
            }
        }
    }

    if !saw_faces {
        return Ok(Geometry::Cloud(PointCloud::new(vertices, Frame::PhysicalMm)?));
    }
    let mut triangles = Vec::new();
    for (face_no, face) in faces.iter().enumerate() {
        if face.len() < 3 {
            return Err(MeshError::BadPlyBody(format!(
                "face {face_no} has {} vertices",
                face.len()
            )));
        }
        let idx: Vec<usize> = face
            .iter()
            .map(|&i| {
                if i < 0.0 || i.fract() != 0.0 || i as usize >= vertices.len() {
                    Err(MeshError::IndexOutOfRange {
                        line: face_no,
                        index: i as i64,
                        vertex_count: vertices.len(),
                    })
                } else {
                    Ok(i as usize)
                }
            })
            .collect::<Result<_, _>>()?;
        for w in 1..idx.len() - 1 {
            triangles.push([idx[0], idx[w], idx[w + 1]]);
        }
    }
    Ok(Geometry::Mesh(TriangleMesh::new(vertices, triangles)?))
}

/// ASCII PLY with float32 x/y/z vertex properties.
pub fn points_to_ply(cloud: &PointCloud) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        cloud.len()
    );
    for p in cloud.points() {
        let _ = writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
    }
    out
}

/// ASCII PLY mesh with float32 vertices and uchar/int face lists.
pub fn mesh_to_ply(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices().len(),
        mesh.triangles().len()
    );
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    out
}
