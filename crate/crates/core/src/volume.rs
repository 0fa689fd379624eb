//! Ground-truth surface extraction and masked midpoint slices.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{Frame, Point, PointCloud};
use crate::nifti::{linear_index, MaskVolume, Orientation, Volume};

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("empty segmentation mask")]
    EmptyMask,
    #[error("scan dims {scan:?} do not match mask dims {mask:?}")]
    DimsMismatch { scan: [usize; 3], mask: [usize; 3] },
    #[error("structure absent at midpoint: {plane} slice {index} of the mask is empty")]
    StructureAbsent { plane: Plane, index: usize },
    #[error("slice has no in-mask pixels")]
    EmptySlice,
    #[error("failed to write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

/// Anatomical plane of the input slice. Sagittal slices are not supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Plane {
    Coronal,
    Axial,
}

impl Plane {
    pub fn as_str(self) -> &'static str {
        match self {
            Plane::Coronal => "coronal",
            Plane::Axial => "axial",
        }
    }

    /// World axis normal to the plane (RAS+: 1 = anterior, 2 = superior).
    fn world_axis(self) -> usize {
        match self {
            Plane::Coronal => 1,
            Plane::Axial => 2,
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlaneParseError {
    #[error("sagittal plane is excluded from the benchmark; use coronal or axial")]
    Sagittal,
    #[error("unknown plane {0:?}; expected coronal or axial")]
    Unknown(String),
}

impl FromStr for Plane {
    type Err = PlaneParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "coronal" => Ok(Plane::Coronal),
            "axial" => Ok(Plane::Axial),
            "sagittal" => Err(PlaneParseError::Sagittal),
            _ => Err(PlaneParseError::Unknown(s.to_string())),
        }
    }
}

impl Serialize for Plane {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Plane {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Index axis to slice along for `plane`, and whether orientation was missing.
///
/// Without orientation codes a RAS-like layout is assumed (axis 2 axial,
/// axis 1 coronal).
pub fn plane_axis(orientation: Option<Orientation>, plane: Plane) -> (usize, bool) {
    match orientation.and_then(|o| o.index_axis_for_world(plane.world_axis())) {
        Some(axis) => (axis, false),
        None => (plane.world_axis(), true),
    }
}

/// `mask AND NOT erode(mask)` with a 6-connected element; voxels outside the
/// grid count as background.
pub fn erode(mask: &MaskVolume) -> Vec<bool> {
    let [nx, ny, nz] = mask.dims();
    let dims = mask.dims();
    let bits = mask.bits();
    let mut out = vec![false; bits.len()];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let idx = linear_index(dims, i, j, k);
                if !bits[idx] {
                    continue;
                }
                let interior = i > 0
                    && i + 1 < nx
                    && j > 0
                    && j + 1 < ny
                    && k > 0
                    && k + 1 < nz
                    && bits[idx - 1]
                    && bits[idx + 1]
                    && bits[idx - nx]
                    && bits[idx + nx]
                    && bits[idx - nx * ny]
                    && bits[idx + nx * ny];
                out[idx] = interior;
            }
        }
    }
    out
}

/// Boundary voxels of the mask as points `(i·sx, j·sy, k·sz)` in mm,
/// ordered lexicographically by `(i, j, k)`.
pub fn surface_points(mask: &MaskVolume) -> Result<PointCloud, VolumeError> {
    let eroded = erode(mask);
    let dims = mask.dims();
    let [sx, sy, sz] = mask.spacing();
    let bits = mask.bits();
    let mut points = Vec::new();
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let idx = linear_index(dims, i, j, k);
                if bits[idx] && !eroded[idx] {
                    points.push(Point::new(i as f64 * sx, j as f64 * sy, k as f64 * sz));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(VolumeError::EmptyMask);
    }
    Ok(PointCloud::new(points, Frame::PhysicalMm).expect("voxel coordinates are finite"))
}

/// Masked 2D cross-section.
///
/// Columns run along the lower-numbered remaining index axis, rows along the
/// higher one; `pixels[row * width + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2D {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
    pub mask: Vec<bool>,
    pub plane: Plane,
    pub axis: usize,
    pub slice_index: usize,
}

impl Slice2D {
    pub fn in_mask_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

pub fn midpoint_index(size: usize) -> usize {
    size / 2
}

/// Extracts the scan slice at `floor(n / 2)` along the plane's axis and zeroes
/// everything outside the mask.
pub fn midpoint_masked_slice(scan: &Volume, mask: &MaskVolume, plane: Plane) -> Result<Slice2D, VolumeError> {
    if scan.dims() != mask.dims() {
        return Err(VolumeError::DimsMismatch {
            scan: scan.dims(),
            mask: mask.dims(),
        });
    }
    let (axis, assumed) = plane_axis(scan.orientation().or(mask.orientation()), plane);
    if assumed {
        log::warn!("no usable orientation in header; assuming RAS-like axes for the {plane} plane");
    }
    let dims = scan.dims();
    let index = midpoint_index(dims[axis]);
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    let (col_axis, row_axis) = (others[0], others[1]);
    let (width, height) = (dims[col_axis], dims[row_axis]);

    let mut pixels = vec![0.0; width * height];
    let mut in_mask = vec![false; width * height];
    for row in 0..height {
        for col in 0..width {
            let mut ijk = [0usize; 3];
            ijk[axis] = index;
            ijk[col_axis] = col;
            ijk[row_axis] = row;
            if mask.get(ijk[0], ijk[1], ijk[2]) {
                pixels[row * width + col] = scan.get(ijk[0], ijk[1], ijk[2]);
                in_mask[row * width + col] = true;
            }
        }
    }
    if !in_mask.iter().any(|&b| b) {
        return Err(VolumeError::StructureAbsent { plane, index });
    }
    Ok(Slice2D {
        width,
        height,
        pixels,
        mask: in_mask,
        plane,
        axis,
        slice_index: index,
    })
}

/// 8-bit gray levels: in-mask pixels min–max scaled to `[1, 255]`,
/// background 0. A constant in-mask intensity maps to 255.
pub fn slice_to_gray(slice: &Slice2D) -> Result<Vec<u8>, VolumeError> {
    let values = slice
        .pixels
        .iter()
        .zip(&slice.mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v);
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return Err(VolumeError::EmptySlice);
    }
    let range = hi - lo;
    Ok(slice
        .pixels
        .iter()
        .zip(&slice.mask)
        .map(|(&v, &m)| {
            if !m {
                0
            } else if range <= 0.0 {
                255
            } else {
                (1.0 + 254.0 * (v - lo) / range).round().clamp(1.0, 255.0) as u8
            }
        })
        .collect())
}

/// Writes the slice as an 8-bit grayscale PNG.
pub fn export_slice(slice: &Slice2D, path: impl AsRef<Path>) -> Result<(), VolumeError> {
    let path = path.as_ref();
    let gray = slice_to_gray(slice)?;
    let write_err = |message: String| VolumeError::Write {
        path: path.to_path_buf(),
        message,
    };
    let file = File::create(path).map_err(|e| write_err(e.to_string()))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), slice.width as u32, slice.height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(|e| write_err(e.to_string()))?;
    writer.write_image_data(&gray).map_err(|e| write_err(e.to_string()))?;
    writer.finish().map_err(|e| write_err(e.to_string()))
}
