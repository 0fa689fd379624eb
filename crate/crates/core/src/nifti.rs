//! NIfTI-1 volume reading (and a small writer).
//!
//! Only the single-file (`n+1`) and paired (`ni1`) NIfTI-1 layouts are
//! understood. Files may be gzip-compressed; compression is detected from
//! the gzip magic bytes rather than the file extension. Voxel data is always
//! converted to `f64` after applying the header's slope/intercept.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{BigEndian, ByteOrder, LittleEndian, WriteBytesExt};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::Matrix3;
use thiserror::Error;

pub const NIFTI1_HEADER_SIZE: usize = 348;
const NIFTI2_HEADER_SIZE: i32 = 540;
const DEFAULT_VOX_OFFSET: usize = 352;

mod offsets {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QUATERN_B: usize = 256;
    pub const SROW_X: usize = 280;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to decompress gzip stream: {0}")]
    Gzip(#[source] std::io::Error),
    #[error("not a NIfTI-1 file")]
    NotNifti1,
    #[error("NIfTI-2 files are not supported (header size 540)")]
    Nifti2Unsupported,
    #[error("file too short for a NIfTI-1 header ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("unsupported NIfTI data type code {0}")]
    UnsupportedDataType(i16),
    #[error("header declares {0} dimensions, at least 3 are required")]
    TooFewDimensions(i16),
    #[error("invalid size {size} along axis {axis}")]
    InvalidDimension { axis: usize, size: i64 },
    #[error("invalid voxel spacing {spacing} along axis {axis}")]
    InvalidSpacing { axis: usize, spacing: f64 },
    #[error("voxel count {found} does not match dimensions {dims:?}")]
    ShapeMismatch { dims: [usize; 3], found: usize },
    #[error("truncated data section: need {expected} bytes from offset {offset}, file has {available}")]
    TruncatedData {
        offset: usize,
        expected: usize,
        available: usize,
    },
    #[error("empty segmentation mask")]
    EmptyMask,
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = NiftiError> = std::result::Result<T, E>;

/// Supported voxel storage types and their NIfTI codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataType {
    UInt8,
    Int16,
    Int32,
    Float32,
    Float64,
}

impl DataType {
    pub const ALL: [DataType; 5] = [
        DataType::UInt8,
        DataType::Int16,
        DataType::Int32,
        DataType::Float32,
        DataType::Float64,
    ];

    pub fn from_code(code: i16) -> Result<Self> {
        match code {
            2 => Ok(Self::UInt8),
            4 => Ok(Self::Int16),
            8 => Ok(Self::Int32),
            16 => Ok(Self::Float32),
            64 => Ok(Self::Float64),
            other => Err(NiftiError::UnsupportedDataType(other)),
        }
    }

    pub fn code(self) -> i16 {
        match self {
            Self::UInt8 => 2,
            Self::Int16 => 4,
            Self::Int32 => 8,
            Self::Float32 => 16,
            Self::Float64 => 64,
        }
    }

    pub fn size_of(self) -> usize {
        match self {
            Self::UInt8 => 1,
            Self::Int16 => 2,
            Self::Int32 | Self::Float32 => 4,
            Self::Float64 => 8,
        }
    }
}

/// Direction in RAS+ world space that an index axis points along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisCode {
    Right,
    Left,
    Anterior,
    Posterior,
    Superior,
    Inferior,
}

impl AxisCode {
    /// World axis index: 0 = left/right, 1 = posterior/anterior, 2 = inferior/superior.
    pub fn world_axis(self) -> usize {
        match self {
            Self::Right | Self::Left => 0,
            Self::Anterior | Self::Posterior => 1,
            Self::Superior | Self::Inferior => 2,
        }
    }

    fn from_world(axis: usize, positive: bool) -> Self {
        match (axis, positive) {
            (0, true) => Self::Right,
            (0, false) => Self::Left,
            (1, true) => Self::Anterior,
            (1, false) => Self::Posterior,
            (_, true) => Self::Superior,
            (_, false) => Self::Inferior,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Self::Right => 'R',
            Self::Left => 'L',
            Self::Anterior => 'A',
            Self::Posterior => 'P',
            Self::Superior => 'S',
            Self::Inferior => 'I',
        }
    }
}

/// Per-index-axis world direction codes, e.g. `RAS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Orientation(pub [AxisCode; 3]);

impl Orientation {
    pub const RAS: Orientation = Orientation([AxisCode::Right, AxisCode::Anterior, AxisCode::Superior]);

    /// Snaps each column of an index-to-world matrix to its dominant world axis.
    ///
    /// Returns `None` if a column is degenerate or two index axes snap to the
    /// same world axis.
    pub fn from_matrix(m: &Matrix3<f64>) -> Option<Self> {
        let mut codes = [AxisCode::Right; 3];
        let mut used = [false; 3];
        for (a, code) in codes.iter_mut().enumerate() {
            let col = m.column(a);
            if !col.iter().all(|v| v.is_finite()) {
                return None;
            }
            let (world, value) = col
                .iter()
                .enumerate()
                .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .map(|(i, v)| (i, *v))?;
            if value.abs() < 1e-12 || used[world] {
                return None;
            }
            used[world] = true;
            *code = AxisCode::from_world(world, value > 0.0);
        }
        Some(Orientation(codes))
    }

    /// Index axis whose direction lies along the given world axis.
    pub fn index_axis_for_world(&self, world: usize) -> Option<usize> {
        self.0.iter().position(|c| c.world_axis() == world)
    }

    fn direction_matrix(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for (a, code) in self.0.iter().enumerate() {
            let sign = match code {
                AxisCode::Right | AxisCode::Anterior | AxisCode::Superior => 1.0,
                _ => -1.0,
            };
            m[(code.world_axis(), a)] = sign;
        }
        m
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in self.0 {
            write!(f, "{}", c.letter())?;
        }
        Ok(())
    }
}

fn validate_grid(dims: [usize; 3], spacing: [f64; 3], len: usize) -> Result<()> {
    for (axis, &size) in dims.iter().enumerate() {
        if size == 0 {
            return Err(NiftiError::InvalidDimension { axis, size: 0 });
        }
    }
    for (axis, &s) in spacing.iter().enumerate() {
        if !(s.is_finite() && s > 0.0) {
            return Err(NiftiError::InvalidSpacing { axis, spacing: s });
        }
    }
    let expected = dims[0] * dims[1] * dims[2];
    if len != expected {
        return Err(NiftiError::ShapeMismatch { dims, found: len });
    }
    Ok(())
}

/// Linear offset of voxel `(i, j, k)`; `i` varies fastest, as on disk.
#[inline]
pub fn linear_index(dims: [usize; 3], i: usize, j: usize, k: usize) -> usize {
    i + dims[0] * (j + dims[1] * k)
}

/// A scalar 3D grid in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    spacing: [f64; 3],
    data: Vec<f64>,
    orientation: Option<Orientation>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<f64>) -> Result<Self> {
        validate_grid(dims, spacing, data.len())?;
        Ok(Self {
            dims,
            spacing,
            data,
            orientation: None,
        })
    }

    pub fn with_orientation(mut self, orientation: Option<Orientation>) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn orientation(&self) -> Option<Orientation> {
        self.orientation
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[linear_index(self.dims, i, j, k)]
    }
}

/// How a label volume is reduced to foreground/background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskSelector {
    /// Foreground where the value is strictly greater than the threshold.
    Threshold(f64),
    /// Foreground where the value equals the integer label.
    Label(i64),
}

impl Default for MaskSelector {
    fn default() -> Self {
        MaskSelector::Threshold(0.5)
    }
}

impl MaskSelector {
    fn selects(self, value: f64) -> bool {
        match self {
            Self::Threshold(t) => value > t,
            Self::Label(label) => (value - label as f64).abs() < 0.5,
        }
    }
}

/// Binary occupancy grid aligned with a [`Volume`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaskVolume {
    dims: [usize; 3],
    spacing: [f64; 3],
    bits: Vec<bool>,
    orientation: Option<Orientation>,
}

impl MaskVolume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], bits: Vec<bool>) -> Result<Self> {
        validate_grid(dims, spacing, bits.len())?;
        Ok(Self {
            dims,
            spacing,
            bits,
            orientation: None,
        })
    }

    /// Builds a mask from a parsed volume. Fails if nothing is selected.
    pub fn from_volume(volume: &Volume, selector: MaskSelector) -> Result<Self> {
        let bits: Vec<bool> = volume.data.iter().map(|&v| selector.selects(v)).collect();
        if !bits.iter().any(|&b| b) {
            return Err(NiftiError::EmptyMask);
        }
        Ok(Self {
            dims: volume.dims,
            spacing: volume.spacing,
            bits,
            orientation: volume.orientation,
        })
    }

    pub fn with_orientation(mut self, orientation: Option<Orientation>) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn orientation(&self) -> Option<Orientation> {
        self.orientation
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.bits[linear_index(self.dims, i, j, k)]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Parses a `.nii` or `.nii.gz` file.
pub fn parse_nifti(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let raw = fs::read(path).map_err(|source| NiftiError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bytes = maybe_gunzip(raw)?;
    let header = Header::parse(&bytes)?;
    if header.paired {
        // ni1: voxel data lives in the sibling .img file.
        let img_path = companion_image_path(path);
        let raw = fs::read(&img_path).map_err(|source| NiftiError::Io {
            path: img_path.clone(),
            source,
        })?;
        let img = maybe_gunzip(raw)?;
        return header.decode(&img, header.vox_offset);
    }
    let offset = header.vox_offset.max(NIFTI1_HEADER_SIZE);
    header.decode(&bytes, offset)
}

/// Parses an in-memory single-file NIfTI-1 image, gzip-compressed or not.
pub fn parse_nifti_bytes(bytes: &[u8]) -> Result<Volume> {
    let bytes = maybe_gunzip(bytes.to_vec())?;
    let header = Header::parse(&bytes)?;
    let offset = if header.paired {
        header.vox_offset
    } else {
        header.vox_offset.max(NIFTI1_HEADER_SIZE)
    };
    header.decode(&bytes, offset)
}

/// Parses `path` and binarizes it with `value > threshold`.
pub fn read_mask(path: impl AsRef<Path>, threshold: f64) -> Result<MaskVolume> {
    read_mask_with(path, MaskSelector::Threshold(threshold))
}

pub fn read_mask_with(path: impl AsRef<Path>, selector: MaskSelector) -> Result<MaskVolume> {
    let volume = parse_nifti(path)?;
    MaskVolume::from_volume(&volume, selector)
}

fn companion_image_path(path: &Path) -> PathBuf {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let stem = name
        .strip_suffix(".hdr.gz")
        .or_else(|| name.strip_suffix(".hdr"))
        .or_else(|| name.strip_suffix(".nii.gz"))
        .or_else(|| name.strip_suffix(".nii"))
        .unwrap_or(name);
    let plain = path.with_file_name(format!("{stem}.img"));
    if plain.exists() {
        plain
    } else {
        path.with_file_name(format!("{stem}.img.gz"))
    }
}

fn maybe_gunzip(raw: Vec<u8>) -> Result<Vec<u8>> {
    if raw.len() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b {
        let mut out = Vec::new();
        MultiGzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(NiftiError::Gzip)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn i16(self, b: &[u8]) -> i16 {
        match self {
            Self::Little => LittleEndian::read_i16(b),
            Self::Big => BigEndian::read_i16(b),
        }
    }

    fn i32(self, b: &[u8]) -> i32 {
        match self {
            Self::Little => LittleEndian::read_i32(b),
            Self::Big => BigEndian::read_i32(b),
        }
    }

    fn f32(self, b: &[u8]) -> f32 {
        match self {
            Self::Little => LittleEndian::read_f32(b),
            Self::Big => BigEndian::read_f32(b),
        }
    }

    fn f64(self, b: &[u8]) -> f64 {
        match self {
            Self::Little => LittleEndian::read_f64(b),
            Self::Big => BigEndian::read_f64(b),
        }
    }
}

#[derive(Debug)]
struct Header {
    endian: Endian,
    dims: [usize; 3],
    spacing: [f64; 3],
    datatype: DataType,
    vox_offset: usize,
    slope: f64,
    intercept: f64,
    orientation: Option<Orientation>,
    paired: bool,
}

impl Header {
    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(NiftiError::TruncatedHeader(bytes.len()));
        }
        let size_field = &bytes[offsets::SIZEOF_HDR..offsets::SIZEOF_HDR + 4];
        let endian = if LittleEndian::read_i32(size_field) == NIFTI1_HEADER_SIZE as i32 {
            Endian::Little
        } else if BigEndian::read_i32(size_field) == NIFTI1_HEADER_SIZE as i32 {
            Endian::Big
        } else if LittleEndian::read_i32(size_field) == NIFTI2_HEADER_SIZE
            || BigEndian::read_i32(size_field) == NIFTI2_HEADER_SIZE
        {
            return Err(NiftiError::Nifti2Unsupported);
        } else {
            return Err(NiftiError::NotNifti1);
        };
        if bytes.len() < NIFTI1_HEADER_SIZE {
            return Err(NiftiError::TruncatedHeader(bytes.len()));
        }

        let magic = &bytes[offsets::MAGIC..offsets::MAGIC + 4];
        let paired = match magic {
            b"n+1\0" => false,
            b"ni1\0" => true,
            _ => return Err(NiftiError::NotNifti1),
        };

        let i16_at = |off: usize| endian.i16(&bytes[off..off + 2]);
        let f32_at = |off: usize| endian.f32(&bytes[off..off + 4]) as f64;

        let ndim = i16_at(offsets::DIM);
        if ndim < 3 {
            return Err(NiftiError::TooFewDimensions(ndim));
        }
        let mut dims = [0usize; 3];
        for (a, d) in dims.iter_mut().enumerate() {
            let raw = i16_at(offsets::DIM + 2 * (a + 1));
            if raw < 1 {
                return Err(NiftiError::InvalidDimension {
                    axis: a,
                    size: raw as i64,
                });
            }
            *d = raw as usize;
        }
        let datatype = DataType::from_code(i16_at(offsets::DATATYPE))?;

        let mut spacing = [0.0; 3];
        for (a, s) in spacing.iter_mut().enumerate() {
            let raw = f32_at(offsets::PIXDIM + 4 * (a + 1)).abs();
            if !(raw.is_finite() && raw > 0.0) {
                return Err(NiftiError::InvalidSpacing { axis: a, spacing: raw });
            }
            *s = raw;
        }

        let vox_offset = f32_at(offsets::VOX_OFFSET);
        let vox_offset = if vox_offset.is_finite() && vox_offset > 0.0 {
            vox_offset as usize
        } else {
            0
        };
        let slope = f32_at(offsets::SCL_SLOPE);
        let intercept = f32_at(offsets::SCL_INTER);

        let orientation = Self::orientation(bytes, endian);

        Ok(Self {
            endian,
            dims,
            spacing,
            datatype,
            vox_offset,
            slope,
            intercept,
            orientation,
            paired,
        })
    }

    /// Direction columns from the sform when set, else the qform.
    fn orientation(bytes: &[u8], endian: Endian) -> Option<Orientation> {
        let i16_at = |off: usize| endian.i16(&bytes[off..off + 2]);
        let f32_at = |off: usize| endian.f32(&bytes[off..off + 4]) as f64;

        if i16_at(offsets::SFORM_CODE) > 0 {
            let mut m = Matrix3::zeros();
            for r in 0..3 {
                for c in 0..3 {
                    m[(r, c)] = f32_at(offsets::SROW_X + 16 * r + 4 * c);
                }
            }
            return Orientation::from_matrix(&m);
        }
        if i16_at(offsets::QFORM_CODE) > 0 {
            let b = f32_at(offsets::QUATERN_B);
            let c = f32_at(offsets::QUATERN_B + 4);
            let d = f32_at(offsets::QUATERN_B + 8);
            let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
            let qfac = if f32_at(offsets::PIXDIM) < 0.0 { -1.0 } else { 1.0 };
            let mut m = Matrix3::new(
                a * a + b * b - c * c - d * d,
                2.0 * (b * c - a * d),
                2.0 * (b * d + a * c),
                2.0 * (b * c + a * d),
                a * a + c * c - b * b - d * d,
                2.0 * (c * d - a * b),
                2.0 * (b * d - a * c),
                2.0 * (c * d + a * b),
                a * a + d * d - c * c - b * b,
            );
            for r in 0..3 {
                m[(r, 2)] *= qfac;
            }
            return Orientation::from_matrix(&m);
        }
        None
    }

    fn decode(&self, bytes: &[u8], offset: usize) -> Result<Volume> {
        let count = self.dims[0] * self.dims[1] * self.dims[2];
        let size = self.datatype.size_of();
        let expected = count * size;
        if bytes.len() < offset || bytes.len() - offset < expected {
            return Err(NiftiError::TruncatedData {
                offset,
                expected,
                available: bytes.len().saturating_sub(offset),
            });
        }
        let raw = &bytes[offset..offset + expected];
        let e = self.endian;
        let mut data: Vec<f64> = match self.datatype {
            DataType::UInt8 => raw.iter().map(|&v| v as f64).collect(),
            DataType::Int16 => raw.chunks_exact(2).map(|c| e.i16(c) as f64).collect(),
            DataType::Int32 => raw.chunks_exact(4).map(|c| e.i32(c) as f64).collect(),
            DataType::Float32 => raw.chunks_exact(4).map(|c| e.f32(c) as f64).collect(),
            DataType::Float64 => raw.chunks_exact(8).map(|c| e.f64(c)).collect(),
        };
        if self.slope != 0.0 && self.slope.is_finite() {
            let (slope, intercept) = (
                self.slope,
                if self.intercept.is_finite() {
                    self.intercept
                } else {
                    0.0
                },
            );
            if slope != 1.0 || intercept != 0.0 {
                for v in &mut data {
                    *v = *v * slope + intercept;
                }
            }
        }
        Ok(Volume::new(self.dims, self.spacing, data)?.with_orientation(self.orientation))
    }
}

/// Serializes a volume as little-endian single-file NIfTI-1.
///
/// Values are cast to `datatype` (integers are rounded). The sform is written
/// from the volume's orientation when present.
pub fn encode_nifti(volume: &Volume, datatype: DataType) -> Vec<u8> {
    let mut hdr = vec![0u8; DEFAULT_VOX_OFFSET];
    let put_i16 = |hdr: &mut [u8], off: usize, v: i16| LittleEndian::write_i16(&mut hdr[off..off + 2], v);
    let put_f32 = |hdr: &mut [u8], off: usize, v: f32| LittleEndian::write_f32(&mut hdr[off..off + 4], v);

    LittleEndian::write_i32(&mut hdr[0..4], NIFTI1_HEADER_SIZE as i32);
    put_i16(&mut hdr, offsets::DIM, 3);
    for a in 0..3 {
        put_i16(&mut hdr, offsets::DIM + 2 * (a + 1), volume.dims[a] as i16);
    }
    for a in 4..8 {
        put_i16(&mut hdr, offsets::DIM + 2 * a, 1);
    }
    put_i16(&mut hdr, offsets::DATATYPE, datatype.code());
    put_i16(&mut hdr, offsets::BITPIX, (datatype.size_of() * 8) as i16);
    put_f32(&mut hdr, offsets::PIXDIM, 1.0);
    for a in 0..3 {
        put_f32(&mut hdr, offsets::PIXDIM + 4 * (a + 1), volume.spacing[a] as f32);
    }
    put_f32(&mut hdr, offsets::VOX_OFFSET, DEFAULT_VOX_OFFSET as f32);
    put_f32(&mut hdr, offsets::SCL_SLOPE, 1.0);
    put_f32(&mut hdr, offsets::SCL_INTER, 0.0);
    // mm + sec
    hdr[offsets::XYZT_UNITS] = 2 | 8;
    if let Some(orientation) = volume.orientation {
        put_i16(&mut hdr, offsets::SFORM_CODE, 1);
        let dir = orientation.direction_matrix();
        for r in 0..3 {
            for c in 0..3 {
                put_f32(
                    &mut hdr,
                    offsets::SROW_X + 16 * r + 4 * c,
                    (dir[(r, c)] * volume.spacing[c]) as f32,
                );
            }
        }
    }
    hdr[offsets::MAGIC..offsets::MAGIC + 4].copy_from_slice(b"n+1\0");

    let mut out = hdr;
    out.reserve(volume.data.len() * datatype.size_of());
    for &v in &volume.data {
        // Writing into a Vec cannot fail.
        let _ = match datatype {
            DataType::UInt8 => out.write_u8(v.round() as u8),
            DataType::Int16 => out.write_i16::<LittleEndian>(v.round() as i16),
            DataType::Int32 => out.write_i32::<LittleEndian>(v.round() as i32),
            DataType::Float32 => out.write_f32::<LittleEndian>(v as f32),
            DataType::Float64 => out.write_f64::<LittleEndian>(v),
        };
    }
    out
}

/// Writes a volume to disk; gzip-compresses when the path ends in `.gz`.
pub fn write_nifti(path: impl AsRef<Path>, volume: &Volume, datatype: DataType) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_nifti(volume, datatype);
    let to_err = |source| NiftiError::Write {
        path: path.to_path_buf(),
        source,
    };
    let gz = path.extension().is_some_and(|e| e == "gz");
    let payload = if gz {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(&bytes).map_err(to_err)?;
        enc.finish().map_err(to_err)?
    } else {
        bytes
    };
    fs::write(path, payload).map_err(to_err)
}
