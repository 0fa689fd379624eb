use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::record::MetricRecord;
use super::HarnessError;
use crate::metrics::Scores;
use crate::volume::Plane;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    F1,
    Precision,
    Recall,
    VoxelIou,
    VoxelDice,
    Chamfer,
    Emd,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::F1,
        Metric::Precision,
        Metric::Recall,
        Metric::VoxelIou,
        Metric::VoxelDice,
        Metric::Chamfer,
        Metric::Emd,
    ];

    /// The five headline metrics shown in Markdown tables.
    pub const HEADLINE: [Metric; 5] = [
        Metric::F1,
        Metric::VoxelIou,
        Metric::VoxelDice,
        Metric::Chamfer,
        Metric::Emd,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::VoxelIou => "voxel_iou",
            Metric::VoxelDice => "voxel_dice",
            Metric::Chamfer => "chamfer",
            Metric::Emd => "emd",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::F1 => "F1",
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::VoxelIou => "Voxel-IoU",
            Metric::VoxelDice => "Voxel-Dice",
            Metric::Chamfer => "CD",
            Metric::Emd => "EMD",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::Chamfer | Metric::Emd)
    }

    pub fn value(self, s: &Scores) -> f64 {
        match self {
            Metric::F1 => s.f1,
            Metric::Precision => s.precision,
            Metric::Recall => s.recall,
            Metric::VoxelIou => s.voxel_iou,
            Metric::VoxelDice => s.voxel_dice,
            Metric::Chamfer => s.chamfer,
            Metric::Emd => s.emd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdKind {
    /// Divisor n − 1; 0 for a single value.
    #[default]
    Sample,
    /// Divisor n.
    Population,
}

/// Mean and standard deviation over ok records; `None` when there are none.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl MetricSummary {
    pub fn from_values(values: &[f64], kind: StdKind) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        let std = match (kind, values.len()) {
            (StdKind::Sample, 1) => 0.0,
            (StdKind::Sample, _) => (ss / (n - 1.0)).sqrt(),
            (StdKind::Population, _) => (ss / n).sqrt(),
        };
        Self {
            mean: Some(mean),
            std: Some(std),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummaries {
    pub f1: MetricSummary,
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub voxel_iou: MetricSummary,
    pub voxel_dice: MetricSummary,
    pub chamfer: MetricSummary,
    pub emd: MetricSummary,
}

impl MetricSummaries {
    pub fn get(&self, metric: Metric) -> &MetricSummary {
        match metric {
            Metric::F1 => &self.f1,
            Metric::Precision => &self.precision,
            Metric::Recall => &self.recall,
            Metric::VoxelIou => &self.voxel_iou,
            Metric::VoxelDice => &self.voxel_dice,
            Metric::Chamfer => &self.chamfer,
            Metric::Emd => &self.emd,
        }
    }

    fn get_mut(&mut self, metric: Metric) -> &mut MetricSummary {
        match metric {
            Metric::F1 => &mut self.f1,
            Metric::Precision => &mut self.precision,
            Metric::Recall => &mut self.recall,
            Metric::VoxelIou => &mut self.voxel_iou,
            Metric::VoxelDice => &mut self.voxel_dice,
            Metric::Chamfer => &mut self.chamfer,
            Metric::Emd => &mut self.emd,
        }
    }
}

/// One (dataset, model, plane) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub model: String,
    pub plane: Plane,
    pub n_ok: usize,
    pub n_skipped: usize,
    pub metrics: MetricSummaries,
}

pub fn aggregate(records: &[MetricRecord]) -> Vec<AggregateRow> {
    aggregate_with(records, StdKind::Sample)
}

/// Groups by (dataset, model, plane); skipped records only count toward
/// `n_skipped`. Rows come out sorted by the group key.
pub fn aggregate_with(records: &[MetricRecord], kind: StdKind) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, &str, Plane), Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.as_str(), r.model.as_str(), r.plane))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((dataset, model, plane), mut members)| {
            members.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
            let ok: Vec<&Scores> = members.iter().filter_map(|r| r.metrics.as_ref()).collect();
            let mut metrics = MetricSummaries::default();
            for metric in Metric::ALL {
                let values: Vec<f64> = ok.iter().map(|s| metric.value(s)).collect();
                *metrics.get_mut(metric) = MetricSummary::from_values(&values, kind);
            }
            AggregateRow {
                dataset: dataset.to_string(),
                model: model.to_string(),
                plane,
                n_ok: ok.len(),
                n_skipped: members.len() - ok.len(),
                metrics,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!(
                "unknown report format {other:?}; expected csv, json or markdown"
            )),
        }
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema_version: u32,
    rows: &'a [AggregateRow],
}

pub fn csv_header() -> Vec<String> {
    let mut header: Vec<String> = ["dataset", "model", "plane", "n_ok", "n_skipped"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for m in Metric::ALL {
        header.push(format!("{}_mean", m.key()));
        header.push(format!("{}_std", m.key()));
    }
    header
}

fn render_csv(rows: &[AggregateRow]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| HarnessError::Report(e.to_string());
    w.write_record(csv_header()).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in rows {
        let mut fields = vec![
            row.dataset.clone(),
            row.model.clone(),
            row.plane.to_string(),
            row.n_ok.to_string(),
            row.n_skipped.to_string(),
        ];
        for m in Metric::ALL {
            let s = row.metrics.get(m);
            fields.push(opt(s.mean));
            fields.push(opt(s.std));
        }
        w.write_record(&fields).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Report(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `"mean ± std"` to 4 decimals, `n/a` for a group without ok records.
pub fn format_cell(summary: &MetricSummary) -> String {
    match (summary.mean, summary.std) {
        (Some(mean), Some(std)) => format!("{mean:.4} ± {std:.4}"),
        _ => "n/a".to_string(),
    }
}

fn markdown_table_header(out: &mut String) {
    out.push_str("| Model | Plane |");
    for m in Metric::HEADLINE {
        let arrow = if m.higher_is_better() { "↑" } else { "↓" };
        let _ = write!(out, " {} {arrow} |", m.label());
    }
    out.push_str(" n | Skipped |\n|---|---|");
    for _ in Metric::HEADLINE {
        out.push_str("---|");
    }
    out.push_str("---|---|\n");
}

fn render_markdown(rows: &[AggregateRow]) -> String {
    let mut out = String::from("# Reconstruction metrics\n\n");
    if rows.is_empty() {
        markdown_table_header(&mut out);
        out.push('\n');
    }
    let mut i = 0;
    while i < rows.len() {
        let dataset = &rows[i].dataset;
        let _ = writeln!(out, "## {dataset}\n");
        markdown_table_header(&mut out);
        while i < rows.len() && &rows[i].dataset == dataset {
            let row = &rows[i];
            let _ = write!(out, "| {} | {} |", row.model, row.plane);
            for m in Metric::HEADLINE {
                let _ = write!(out, " {} |", format_cell(row.metrics.get(m)));
            }
            let _ = writeln!(out, " {} | {} |", row.n_ok, row.n_skipped);
            i += 1;
        }
        out.push('\n');
    }
    out.push_str("Values are mean ± standard deviation over scored samples. ");
    out.push_str("Higher is better for F1, Voxel-IoU and Voxel-Dice; lower is better for CD and EMD.\n");
    out
}

pub fn render_report(rows: &[AggregateRow], format: ReportFormat) -> Result<String, HarnessError> {
    match format {
        ReportFormat::Csv => render_csv(rows),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&JsonReport {
                schema_version: REPORT_SCHEMA_VERSION,
                rows,
            })
            .map_err(|e| HarnessError::Report(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Markdown => Ok(render_markdown(rows)),
    }
}

pub fn write_report(rows: &[AggregateRow], format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let text = render_report(rows, format)?;
    fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
