use std::fmt;

use serde::{Deserialize, Serialize};

use crate::metrics::Scores;
use crate::volume::Plane;

pub const RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Skipped,
}

/// Machine-readable cause of a skipped record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    PredictionMissing,
    PredictionUnreadable,
    ScanUnreadable,
    MaskUnreadable,
    DimsMismatch,
    MaskEmpty,
    StructureAbsentAtMidpoint,
    DegenerateGroundTruth,
    DegeneratePrediction,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::PredictionMissing => "prediction-missing",
            SkipReason::PredictionUnreadable => "prediction-unreadable",
            SkipReason::ScanUnreadable => "scan-unreadable",
            SkipReason::MaskUnreadable => "mask-unreadable",
            SkipReason::DimsMismatch => "dims-mismatch",
            SkipReason::MaskEmpty => "mask-empty",
            SkipReason::StructureAbsentAtMidpoint => "structure-absent-at-midpoint",
            SkipReason::DegenerateGroundTruth => "degenerate-ground-truth",
            SkipReason::DegeneratePrediction => "degenerate-prediction",
        }
    }

    /// Broken inputs, as opposed to data that legitimately cannot be scored.
    /// Any hard failure makes `run` exit with status 1.
    pub fn is_hard_failure(self) -> bool {
        matches!(
            self,
            SkipReason::PredictionMissing
                | SkipReason::PredictionUnreadable
                | SkipReason::ScanUnreadable
                | SkipReason::MaskUnreadable
                | SkipReason::DimsMismatch
        )
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of scoring one (sample, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub schema_version: u32,
    pub sample_id: String,
    pub dataset: String,
    pub model: String,
    pub plane: Plane,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<SkipReason>,
    /// Human-readable error text for skipped records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pred_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Scores>,
}

impl MetricRecord {
    pub fn ok(sample_id: &str, dataset: &str, model: &str, plane: Plane, seed: u64, metrics: Scores) -> Self {
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            sample_id: sample_id.to_string(),
            dataset: dataset.to_string(),
            model: model.to_string(),
            plane,
            status: Status::Ok,
            reason: None,
            detail: None,
            seed,
            gt_points: None,
            pred_points: None,
            metrics: Some(metrics),
        }
    }

    pub fn skipped(
        sample_id: &str,
        dataset: &str,
        model: &str,
        plane: Plane,
        seed: u64,
        reason: SkipReason,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            schema_version: RECORD_SCHEMA_VERSION,
            sample_id: sample_id.to_string(),
            dataset: dataset.to_string(),
            model: model.to_string(),
            plane,
            status: Status::Skipped,
            reason: Some(reason),
            detail: Some(detail.into()),
            seed,
            gt_points: None,
            pred_points: None,
            metrics: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn is_hard_failure(&self) -> bool {
        self.reason.is_some_and(SkipReason::is_hard_failure)
    }

    /// Canonical ordering used for reports: dataset, model, plane, sample id.
    pub fn sort_key(&self) -> (&str, &str, Plane, &str) {
        (&self.dataset, &self.model, self.plane, &self.sample_id)
    }
}
