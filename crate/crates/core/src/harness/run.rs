use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::manifest::{Manifest, RunConfig, SampleEntry};
use super::record::{MetricRecord, SkipReason};
use super::report::{aggregate, write_report, AggregateRow, ReportFormat};
use super::seed::{mesh_sampling_seed, sample_seed};
use super::HarnessError;
use crate::geometry::{normalize_unit_cube, PointCloud};
use crate::mesh::{load_mesh, prediction_cloud};
use crate::metrics::evaluate_pair;
use crate::nifti::{parse_nifti, MaskSelector, MaskVolume, NiftiError};
use crate::volume::{export_slice, midpoint_masked_slice, surface_points, VolumeError};

struct Skip {
    reason: SkipReason,
    detail: String,
}

impl Skip {
    fn new(reason: SkipReason, detail: impl ToString) -> Self {
        Self {
            reason,
            detail: detail.to_string(),
        }
    }
}

fn selector(entry: &SampleEntry, cfg: &RunConfig) -> MaskSelector {
    match entry.label {
        Some(label) => MaskSelector::Label(label),
        None => MaskSelector::Threshold(cfg.mask_threshold),
    }
}

/// Stages 1 and 2: masked midpoint slice and ground-truth surface.
fn prepare(entry: &SampleEntry, cfg: &RunConfig, slice_dir: Option<&Path>) -> Result<PointCloud, Skip> {
    let scan = parse_nifti(&entry.scan_path).map_err(|e| Skip::new(SkipReason::ScanUnreadable, e))?;
    let mask_volume = parse_nifti(&entry.mask_path).map_err(|e| Skip::new(SkipReason::MaskUnreadable, e))?;
    let mask = match MaskVolume::from_volume(&mask_volume, selector(entry, cfg)) {
        Ok(m) => m,
        Err(e @ NiftiError::EmptyMask) => return Err(Skip::new(SkipReason::MaskEmpty, e)),
        Err(e) => return Err(Skip::new(SkipReason::MaskUnreadable, e)),
    };

    let slice = midpoint_masked_slice(&scan, &mask, entry.plane).map_err(|e| match e {
        VolumeError::DimsMismatch { .. } => Skip::new(SkipReason::DimsMismatch, e),
        _ => Skip::new(SkipReason::StructureAbsentAtMidpoint, e),
    })?;
    if let Some(dir) = slice_dir {
        let path = dir.join(format!("{}.png", file_stem(&entry.id)));
        if let Err(e) = export_slice(&slice, &path) {
            log::warn!("sample {}: slice export failed: {e}", entry.id);
        }
    }

    let gt = surface_points(&mask).map_err(|e| Skip::new(SkipReason::MaskEmpty, e))?;
    if gt.len() < 3 {
        return Err(Skip::new(
            SkipReason::DegenerateGroundTruth,
            format!("ground-truth surface has only {} points", gt.len()),
        ));
    }
    normalize_unit_cube(&gt).map_err(|e| Skip::new(SkipReason::DegenerateGroundTruth, e))?;
    Ok(gt)
}

/// Stage 4 for one model against an already extracted ground truth.
fn score(entry: &SampleEntry, model: &str, gt: &PointCloud, cfg: &RunConfig, global_seed: u64) -> MetricRecord {
    let seed = sample_seed(global_seed, &entry.id, model);
    let skipped = |skip: Skip| {
        MetricRecord::skipped(
            &entry.id,
            &entry.dataset,
            model,
            entry.plane,
            seed,
            skip.reason,
            skip.detail,
        )
    };
    let path = &entry.predictions[model];
    if !path.is_file() {
        return skipped(Skip::new(
            SkipReason::PredictionMissing,
            format!("prediction file {} not found", path.display()),
        ));
    }
    let geometry = match load_mesh(path) {
        Ok(g) => g,
        Err(e) => return skipped(Skip::new(SkipReason::PredictionUnreadable, e)),
    };
    let pred = match prediction_cloud(
        &geometry,
        cfg.prediction_mode,
        cfg.sample_points,
        mesh_sampling_seed(seed),
    ) {
        Ok(p) => p,
        Err(e) => return skipped(Skip::new(SkipReason::DegeneratePrediction, e)),
    };
    match evaluate_pair(&pred, gt, &cfg.metric_config(seed)) {
        Ok(scores) => {
            let mut record = MetricRecord::ok(&entry.id, &entry.dataset, model, entry.plane, seed, scores);
            record.gt_points = Some(gt.len());
            record.pred_points = Some(pred.len());
            record
        }
        Err(e) => skipped(Skip::new(SkipReason::DegeneratePrediction, e)),
    }
}

fn score_all(entry: &SampleEntry, cfg: &RunConfig, global_seed: u64, slice_dir: Option<&Path>) -> Vec<MetricRecord> {
    match prepare(entry, cfg, slice_dir) {
        Ok(gt) => entry
            .predictions
            .keys()
            .map(|model| score(entry, model, &gt, cfg, global_seed))
            .collect(),
        Err(skip) => entry
            .predictions
            .keys()
            .map(|model| {
                MetricRecord::skipped(
                    &entry.id,
                    &entry.dataset,
                    model,
                    entry.plane,
                    sample_seed(global_seed, &entry.id, model),
                    skip.reason,
                    skip.detail.clone(),
                )
            })
            .collect(),
    }
}

/// Scores one model's prediction for one sample. Never fails: every error
/// becomes a skipped record.
///
/// # Panics
/// If `model` is not a key of `entry.predictions`.
pub fn run_sample(
    entry: &SampleEntry,
    model: &str,
    cfg: &RunConfig,
    global_seed: u64,
    slice_dir: Option<&Path>,
) -> MetricRecord {
    assert!(
        entry.predictions.contains_key(model),
        "unknown model {model:?} for sample {}",
        entry.id
    );
    match prepare(entry, cfg, slice_dir) {
        Ok(gt) => score(entry, model, &gt, cfg, global_seed),
        Err(skip) => MetricRecord::skipped(
            &entry.id,
            &entry.dataset,
            model,
            entry.plane,
            sample_seed(global_seed, &entry.id, model),
            skip.reason,
            skip.detail,
        ),
    }
}

/// Scores every (sample, model) pair on a pool of `threads` workers
/// (`None` = available parallelism). Records come back in canonical order.
pub fn run_manifest(
    manifest: &Manifest,
    global_seed: u64,
    threads: Option<usize>,
    slice_dir: Option<&Path>,
) -> Result<Vec<MetricRecord>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let cfg = &manifest.config;
    let mut records: Vec<MetricRecord> = pool.install(|| {
        manifest
            .samples
            .par_iter()
            .flat_map_iter(|entry| score_all(entry, cfg, global_seed, slice_dir))
            .collect()
    });
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(records)
}

/// Record file name component: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn record_file_name(record: &MetricRecord) -> String {
    format!("{}__{}.json", file_stem(&record.sample_id), file_stem(&record.model))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub records: Vec<MetricRecord>,
    pub rows: Vec<AggregateRow>,
}

impl RunSummary {
    pub fn hard_failures(&self) -> usize {
        self.records.iter().filter(|r| r.is_hard_failure()).count()
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Full batch: writes `records/<sample>__<model>.json`, optional
/// `slices/<sample>.png`, and `report.{json,csv,md}` under `out`.
pub fn run_to_dir(
    manifest: &Manifest,
    global_seed: u64,
    threads: Option<usize>,
    out: &Path,
) -> Result<RunSummary, HarnessError> {
    let records_dir = out.join("records");
    create_dir(&records_dir)?;
    let slice_dir: Option<PathBuf> = manifest.config.export_slices.then(|| out.join("slices"));
    if let Some(dir) = &slice_dir {
        create_dir(dir)?;
    }

    let records = run_manifest(manifest, global_seed, threads, slice_dir.as_deref())?;

    let mut names = std::collections::HashSet::new();
    for record in &records {
        let name = record_file_name(record);
        if !names.insert(name.clone()) {
            return Err(HarnessError::NameCollision(name));
        }
        let mut json = serde_json::to_vec_pretty(record).expect("records always serialize");
        json.push(b'\n');
        write_file(&records_dir.join(name), &json)?;
    }
    let stale = fs::read_dir(&records_dir)
        .map(|rd| {
            rd.filter_map(Result::ok)
                .filter(|e| {
                    e.file_name()
                        .to_str()
                        .is_some_and(|n| n.ends_with(".json") && !names.contains(n))
                })
                .count()
        })
        .unwrap_or(0);
    if stale > 0 {
        log::warn!(
            "{} contains {stale} record files not produced by this run",
            records_dir.display()
        );
    }

    let rows = aggregate(&records);
    for (format, name) in [
        (ReportFormat::Json, "report.json"),
        (ReportFormat::Csv, "report.csv"),
        (ReportFormat::Markdown, "report.md"),
    ] {
        write_report(&rows, format, &out.join(name))?;
    }
    Ok(RunSummary { records, rows })
}

/// Reads every `*.json` record in `dir`, or in `dir/records` if that exists.
pub fn read_records(dir: &Path) -> Result<Vec<MetricRecord>, HarnessError> {
    let nested = dir.join("records");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let io_err = |source| HarnessError::Io {
        path: dir.clone(),
        source,
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io_err)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    paths.sort();
    let mut records = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        let record: MetricRecord = serde_json::from_str(&text).map_err(|e| HarnessError::Record {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if record.schema_version != super::record::RECORD_SCHEMA_VERSION {
            return Err(HarnessError::Record {
                path,
                message: format!("unsupported schema_version {}", record.schema_version),
            });
        }
        records.push(record);
    }
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(records)
}
