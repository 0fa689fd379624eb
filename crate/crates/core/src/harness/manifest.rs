use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::IcpParams;
use crate::mesh::PredictionMode;
use crate::metrics::{MetricConfig, DEFAULT_EMD_CAP, DEFAULT_GRID_SIZE, DEFAULT_TAU};
use crate::volume::Plane;

pub const DEFAULT_SAMPLE_POINTS: usize = 10_000;

fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_grid_size() -> usize {
    DEFAULT_GRID_SIZE
}
fn default_emd_cap() -> usize {
    DEFAULT_EMD_CAP
}
fn default_sample_points() -> usize {
    DEFAULT_SAMPLE_POINTS
}
fn default_mask_threshold() -> f64 {
    0.5
}

/// Run-wide settings: the metric protocol plus how inputs are prepared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    #[serde(default = "default_emd_cap")]
    pub emd_cap: usize,
    #[serde(default)]
    pub icp: IcpParams,
    /// Points sampled from each predicted mesh.
    #[serde(default = "default_sample_points")]
    pub sample_points: usize,
    #[serde(default)]
    pub prediction_mode: PredictionMode,
    /// Mask binarization threshold used when a sample has no `label`.
    #[serde(default = "default_mask_threshold")]
    pub mask_threshold: f64,
    /// Write each sample's masked midpoint slice as PNG next to the records.
    #[serde(default)]
    pub export_slices: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            grid_size: DEFAULT_GRID_SIZE,
            emd_cap: DEFAULT_EMD_CAP,
            icp: IcpParams::default(),
            sample_points: DEFAULT_SAMPLE_POINTS,
            prediction_mode: PredictionMode::default(),
            mask_threshold: 0.5,
            export_slices: false,
        }
    }
}

impl RunConfig {
    pub fn metric_config(&self, seed: u64) -> MetricConfig {
        MetricConfig {
            tau: self.tau,
            grid_size: self.grid_size,
            emd_cap: self.emd_cap,
            seed,
            icp: self.icp,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.metric_config(0)
            .validate()
            .map_err(|e| HarnessError::Manifest(e.to_string()))?;
        if self.sample_points == 0 {
            return Err(HarnessError::Manifest("sample_points must be >= 1".into()));
        }
        if !self.mask_threshold.is_finite() {
            return Err(HarnessError::Manifest("mask_threshold must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleEntry {
    pub id: String,
    pub dataset: String,
    pub scan_path: PathBuf,
    pub mask_path: PathBuf,
    /// Mask value selecting one structure; otherwise the mask is thresholded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<i64>,
    pub plane: Plane,
    /// Model name to prediction file (`.obj` or `.ply`).
    pub predictions: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    schema_version: Option<u32>,
    #[serde(default)]
    global_seed: Option<u64>,
    #[serde(default)]
    config: RunConfig,
    samples: Vec<SampleEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub samples: Vec<SampleEntry>,
    pub config: RunConfig,
    /// Seed from the file, if it set one.
    pub global_seed: Option<u64>,
}

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

impl Manifest {
    /// Parses JSON or TOML text; relative paths resolve against `base_dir`.
    pub fn from_str(text: &str, toml_syntax: bool, base_dir: &Path) -> Result<Self, HarnessError> {
        let file: ManifestFile = if toml_syntax {
            toml::from_str(text).map_err(|e| HarnessError::Manifest(e.to_string()))?
        } else {
            serde_json::from_str(text).map_err(|e| HarnessError::Manifest(e.to_string()))?
        };
        if let Some(v) = file.schema_version {
            if v != MANIFEST_SCHEMA_VERSION {
                return Err(HarnessError::Manifest(format!(
                    "unsupported manifest schema_version {v}"
                )));
            }
        }
        file.config.validate()?;

        let mut seen = HashSet::new();
        let mut samples = file.samples;
        for s in &mut samples {
            if s.id.trim().is_empty() {
                return Err(HarnessError::Manifest("sample id must not be empty".into()));
            }
            if !seen.insert(s.id.clone()) {
                return Err(HarnessError::Manifest(format!("duplicate sample id {:?}", s.id)));
            }
            s.scan_path = resolve(base_dir, &s.scan_path);
            s.mask_path = resolve(base_dir, &s.mask_path);
            for path in s.predictions.values_mut() {
                *path = resolve(base_dir, path);
            }
        }
        Ok(Self {
            samples,
            config: file.config,
            global_seed: file.global_seed,
        })
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads a `.json` or `.toml` manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let toml_syntax = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Manifest::from_str(&text, toml_syntax, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "samples": [{
            "id": "case1", "dataset": "toy", "scan_path": "scan.nii.gz", "mask_path": "/abs/mask.nii",
            "plane": "coronal", "predictions": {"model-a": "pred/case1.obj"}
        }]
    }"#;

    #[test]
    fn minimal_json() {
        let m = Manifest::from_str(MINIMAL, false, Path::new("/data")).unwrap();
        assert_eq!(m.samples.len(), 1);
        let s = &m.samples[0];
        assert_eq!(s.scan_path, PathBuf::from("/data/scan.nii.gz"));
        assert_eq!(s.mask_path, PathBuf::from("/abs/mask.nii"));
        assert_eq!(s.predictions["model-a"], PathBuf::from("/data/pred/case1.obj"));
        assert_eq!(m.config, RunConfig::default());
        assert_eq!(m.global_seed, None);
    }

    #[test]
    fn toml_manifest() {
        let text = r#"
global_seed = 9
[config]
tau = 0.02
sample_points = 500

[[samples]]
id = "a"
dataset = "d"
scan_path = "s.nii"
mask_path = "m.nii"
label = 3
plane = "axial"
predictions = { TripoSG = "a.ply" }
"#;
        let m = Manifest::from_str(text, true, Path::new("base")).unwrap();
        assert_eq!(m.global_seed, Some(9));
        assert_eq!(m.config.tau, 0.02);
        assert_eq!(m.config.sample_points, 500);
        assert_eq!(m.config.grid_size, 64);
        assert_eq!(m.samples[0].label, Some(3));
        assert_eq!(m.samples[0].plane, Plane::Axial);
    }

    #[test]
    fn sagittal_is_rejected() {
        let text = MINIMAL.replace("coronal", "sagittal");
        let err = Manifest::from_str(&text, false, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("sagittal plane is excluded"), "{err}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = r#"{"samples": [
            {"id": "x", "dataset": "d", "scan_path": "s", "mask_path": "m", "plane": "axial", "predictions": {}},
            {"id": "x", "dataset": "d", "scan_path": "s", "mask_path": "m", "plane": "axial", "predictions": {}}
        ]}"#;
        let err = Manifest::from_str(text, false, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("duplicate sample id"), "{err}");
    }

    #[test]
    fn missing_field_and_bad_config() {
        let text =
            r#"{"samples": [{"id": "x", "dataset": "d", "scan_path": "s", "plane": "axial", "predictions": {}}]}"#;
        assert!(Manifest::from_str(text, false, Path::new(".")).is_err());
        let text = r#"{"config": {"grid_size": 1}, "samples": []}"#;
        assert!(Manifest::from_str(text, false, Path::new(".")).is_err());
        let text = r#"{"config": {"unknown_knob": 1}, "samples": []}"#;
        assert!(Manifest::from_str(text, false, Path::new(".")).is_err());
    }
}
