use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use volbench::geometry::{IcpParams, PointCloud};
use volbench::harness::{self, ReportFormat, StdKind};
use volbench::mesh::{self, Geometry, PredictionMode};
use volbench::metrics::{self, MetricConfig, Scores};
use volbench::nifti::{self, MaskSelector, MaskVolume};
use volbench::volume::{self, Plane};

const SEED_ENV: &str = "VOLBENCH_SEED";

#[derive(Parser)]
#[command(name = "volbench", version, about = "Single-slice-to-3D reconstruction benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the ground-truth surface point cloud of a mask.
    Gt {
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        select: MaskArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the masked midpoint slice of a scan as PNG.
    Slice {
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        plane: Plane,
        #[command(flatten)]
        select: MaskArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one prediction against one ground truth.
    Eval(EvalArgs),
    /// Score every sample and model of a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long, env = "VOLBENCH_THREADS")]
        threads: Option<usize>,
        /// Global seed; overrides the manifest and VOLBENCH_SEED.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Aggregate record files into a report.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
        /// Use the population standard deviation (divisor n) instead of n − 1.
        #[arg(long)]
        population_std: bool,
    },
}

#[derive(Args)]
struct MaskArgs {
    /// Select voxels equal to this label instead of thresholding.
    #[arg(long)]
    label: Option<i64>,
    /// Voxels strictly above this value are foreground.
    #[arg(long, default_value_t = 0.5, conflicts_with = "label")]
    threshold: f64,
}

impl MaskArgs {
    fn selector(&self) -> MaskSelector {
        match self.label {
            Some(l) => MaskSelector::Label(l),
            None => MaskSelector::Threshold(self.threshold),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted mesh (.obj/.ply) or point cloud (.ply).
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth: point cloud (.ply) or segmentation mask (.nii/.nii.gz).
    #[arg(long)]
    gt: PathBuf,
    #[command(flatten)]
    select: MaskArgs,
    #[arg(long, default_value_t = metrics::DEFAULT_TAU)]
    tau: f64,
    #[arg(long, default_value_t = metrics::DEFAULT_GRID_SIZE)]
    grid: usize,
    #[arg(long, default_value_t = IcpParams::default().max_correspondence_distance)]
    icp_threshold: f64,
    #[arg(long, default_value_t = metrics::DEFAULT_EMD_CAP)]
    emd_cap: usize,
    #[arg(long, default_value_t = harness::manifest::DEFAULT_SAMPLE_POINTS)]
    sample_points: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Score mesh vertices instead of area-weighted surface samples.
    #[arg(long)]
    vertices: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct EvalOutput {
    schema_version: u32,
    seed: u64,
    config: MetricConfig,
    pred_points: usize,
    gt_points: usize,
    metrics: Scores,
}

enum Failure {
    /// Bad arguments, manifest or configuration: exit 2.
    Usage(anyhow::Error),
    /// Inputs could not be processed: exit 1.
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Usage(anyhow!("{SEED_ENV}={v:?} is not a 64-bit unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn is_nifti(path: &Path) -> bool {
    let name = path.to_string_lossy().to_ascii_lowercase();
    name.ends_with(".nii") || name.ends_with(".nii.gz") || name.ends_with(".hdr")
}

fn mask_surface(path: &Path, selector: MaskSelector) -> anyhow::Result<PointCloud> {
    let mask = nifti::read_mask_with(path, selector).with_context(|| format!("reading mask {}", path.display()))?;
    Ok(volume::surface_points(&mask)?)
}

fn gt_cloud(path: &Path, selector: MaskSelector) -> anyhow::Result<PointCloud> {
    if is_nifti(path) {
        return mask_surface(path, selector);
    }
    match mesh::load_mesh(path)? {
        Geometry::Cloud(c) => Ok(c),
        Geometry::Mesh(m) => Ok(m.vertex_cloud()),
    }
}

fn eval(args: &EvalArgs) -> Result<(), Failure> {
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    let cfg = MetricConfig {
        tau: args.tau,
        grid_size: args.grid,
        emd_cap: args.emd_cap,
        seed,
        icp: IcpParams {
            max_correspondence_distance: args.icp_threshold,
            ..IcpParams::default()
        },
    };
    cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
    if args.sample_points == 0 {
        return Err(Failure::Usage(anyhow!("--sample-points must be >= 1")));
    }

    let gt = gt_cloud(&args.gt, args.select.selector())?;
    let geometry = mesh::load_mesh(&args.pred).with_context(|| format!("reading {}", args.pred.display()))?;
    let mode = if args.vertices {
        PredictionMode::Vertices
    } else {
        PredictionMode::Surface
    };
    let pred = mesh::prediction_cloud(
        &geometry,
        mode,
        args.sample_points,
        harness::seed::mesh_sampling_seed(seed),
    )
    .map_err(anyhow::Error::from)?;
    let scores = metrics::evaluate_pair(&pred, &gt, &cfg).map_err(anyhow::Error::from)?;
    let output = EvalOutput {
        schema_version: harness::record::RECORD_SCHEMA_VERSION,
        seed,
        config: cfg,
        pred_points: pred.len(),
        gt_points: gt.len(),
        metrics: scores,
    };
    let mut json = serde_json::to_string_pretty(&output).expect("eval output serializes");
    json.push('\n');
    std::fs::write(&args.out, json).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn run(manifest_path: &Path, out: &Path, threads: Option<usize>, seed: Option<u64>) -> Result<bool, Failure> {
    let manifest = harness::load_manifest(manifest_path).map_err(|e| Failure::Usage(e.into()))?;
    if threads == Some(0) {
        return Err(Failure::Usage(anyhow!("--threads must be >= 1")));
    }
    let global_seed = match seed.or(manifest.global_seed) {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    };
    log::info!(
        "scoring {} samples with global seed {global_seed}",
        manifest.samples.len()
    );
    let summary = harness::run_to_dir(&manifest, global_seed, threads, out).map_err(anyhow::Error::from)?;
    let skipped = summary.records.iter().filter(|r| !r.is_ok()).count();
    for r in summary.records.iter().filter(|r| !r.is_ok()) {
        let reason = r.reason.map(|x| x.as_str()).unwrap_or("unknown");
        log::warn!("{} / {}: skipped ({reason})", r.sample_id, r.model);
    }
    println!(
        "{} records ({} ok, {skipped} skipped, {} hard failures) written to {}",
        summary.records.len(),
        summary.records.len() - skipped,
        summary.hard_failures(),
        out.display()
    );
    Ok(summary.hard_failures() == 0)
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Gt { mask, select, out } => {
            let cloud = mask_surface(&mask, select.selector())?;
            mesh::write_ply_points(&out, &cloud).map_err(anyhow::Error::from)?;
            println!("{} surface points written to {}", cloud.len(), out.display());
        }
        Command::Slice {
            scan,
            mask,
            plane,
            select,
            out,
        } => {
            let scan_volume = nifti::parse_nifti(&scan).with_context(|| format!("reading scan {}", scan.display()))?;
            let mask_volume = nifti::parse_nifti(&mask).with_context(|| format!("reading mask {}", mask.display()))?;
            let mask = MaskVolume::from_volume(&mask_volume, select.selector()).map_err(anyhow::Error::from)?;
            let slice = volume::midpoint_masked_slice(&scan_volume, &mask, plane).map_err(anyhow::Error::from)?;
            volume::export_slice(&slice, &out).map_err(anyhow::Error::from)?;
            println!(
                "{plane} slice {} ({}x{}) written to {}",
                slice.slice_index,
                slice.width,
                slice.height,
                out.display()
            );
        }
        Command::Eval(args) => eval(&args)?,
        Command::Run {
            manifest,
            out,
            threads,
            seed,
        } => return run(&manifest, &out, threads, seed),
        Command::Report {
            records,
            format,
            out,
            population_std,
        } => {
            let records = harness::read_records(&records).map_err(anyhow::Error::from)?;
            let kind = if population_std {
                StdKind::Population
            } else {
                StdKind::Sample
            };
            let rows = harness::aggregate_with(&records, kind);
            harness::write_report(&rows, format, &out).map_err(anyhow::Error::from)?;
            println!(
                "{} rows from {} records written to {}",
                rows.len(),
                records.len(),
                out.display()
            );
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
