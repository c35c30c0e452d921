//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::io::{self, Manifest, ManifestEntry};
use crate::metrics::{evaluate, mean_report, EvalConfig, MetricsReport};
use crate::pipeline::{reconstruct, PipelineConfig, PipelineError, Reconstruction, VoteSource};
use crate::render::render_svg;
use crate::synthgen::{generate_scene, scene_with_rooms, SceneSpec};
use crate::votes::{NoiseSpec, VoteError};

#[derive(Debug, Parser)]
#[command(name = "planforge", version, about = "Floorplan reconstruction from wall point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic scenes with ground-truth plans.
    Gen(GenArgs),
    /// Reconstruct a floorplan from a scene (or every scene of a manifest).
    Reconstruct(ReconstructArgs),
    /// Score a predicted plan against ground truth.
    Eval(EvalArgs),
    /// Draw a plan as SVG.
    Render(RenderArgs),
    /// Time the pipeline on generated scenes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Base seed; scene `i` uses `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub max_rooms: usize,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineFlags {
    /// `oracle` or the path of a votes file.
    #[arg(long, default_value = "oracle")]
    pub votes: String,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub outlier_frac: f64,
    /// Seed of the oracle vote noise.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub eps_room: Option<f64>,
    #[arg(long)]
    pub eps_wall: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl PipelineFlags {
    fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig { threads: self.threads, ..PipelineConfig::default() };
        if let Some(e) = self.eps_room {
            cfg.room_dbscan.eps = e;
        }
        if let Some(e) = self.eps_wall {
            cfg.wall_dbscan.eps = e;
        }
        cfg
    }

    fn noise(&self, seed: u64) -> NoiseSpec {
        NoiseSpec { sigma: self.noise_sigma, outlier_fraction: self.outlier_frac, rng_seed: seed }
    }
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Scene file, or a manifest for batch mode.
    pub input: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    /// Output floorplan file (directory in batch mode).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Also write the votes used, in input coordinates.
    #[arg(long)]
    pub write_votes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground truth: a floorplan, a scene carrying `gt_rooms`, or a manifest.
    pub gt: PathBuf,
    /// Prediction: a floorplan, or in batch mode the directory written by
    /// `reconstruct`.
    pub pred: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Report file (JSON, or CSV in batch mode); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Floorplan, or a scene carrying `gt_rooms`.
    pub plan: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10)]
    pub rooms: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Thread counts to time; repeat the flag for several.
    #[arg(long, default_values_t = vec![1])]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeat: usize,
}

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input files or arguments (exit 2).
    Input(anyhow::Error),
    /// The reconstruction produced no rooms (exit 3).
    Empty,
    /// An internal invariant broke (exit 4).
    Internal(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Empty => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<io::IoError> for CliError {
    fn from(e: io::IoError) -> Self {
        CliError::Input(e.into())
    }
}

fn pipeline_error(e: PipelineError) -> CliError {
    match e {
        PipelineError::EmptyScene
        | PipelineError::VoteMismatch(_)
        | PipelineError::Config(_)
        | PipelineError::Votes(VoteError::MissingLabels | VoteError::TooFewPoints { .. } | VoteError::InvalidNoise(_)) => {
            CliError::Input(e.into())
        }
        other => CliError::Internal(other.into()),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Reconstruct(a) => cmd_reconstruct(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Render(a) => cmd_render(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

/// Parses arguments, runs, reports errors on stderr and maps them to an
/// exit code.
pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PLANFORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Input(err) => eprintln!("error: {err:#}"),
                CliError::Empty => eprintln!("error: no rooms found"),
                CliError::Internal(err) => eprintln!("internal error: {err:#}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn scene_file_name(id: usize) -> String {
    format!("scene_{id:05}.json")
}

fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))
        .map_err(CliError::Input)?;
    let entries: Vec<ManifestEntry> = (0..a.count)
        .into_par_iter()
        .map(|id| {
            let seed = a.seed.wrapping_add(id as u64);
            let spec = SceneSpec { n_rooms_max: a.max_rooms, ..SceneSpec::with_seed(seed) };
            let scene = generate_scene(&spec).map_err(|e| CliError::Input(e.into()))?;
            let name = scene_file_name(id);
            io::write_scene(&a.out.join(&name), &scene.cloud, Some(&scene.plan))?;
            Ok(ManifestEntry { id, seed, scene: name })
        })
        .collect::<Result<_, CliError>>()?;
    log::info!("wrote {} scenes to {}", entries.len(), a.out.display());
    io::write_json(&a.out.join("manifest.json"), &Manifest { samples: entries })?;
    Ok(())
}

fn run_pipeline(scene: &Path, flags: &PipelineFlags, noise_seed: u64) -> Result<Reconstruction, CliError> {
    let (cloud, _) = io::read_scene(scene)?;
    let source = if flags.votes == "oracle" {
        VoteSource::Oracle(flags.noise(noise_seed))
    } else {
        VoteSource::Provided(io::read_votes(Path::new(&flags.votes))?)
    };
    let rec = reconstruct(&cloud, &source, &flags.config()).map_err(pipeline_error)?;
    for (name, d) in &rec.timings.stages {
        log::info!("{}: stage {name} {:.3} ms", scene.display(), d.as_secs_f64() * 1e3);
    }
    log::info!(
        "{}: total {:.3} ms, {} rooms",
        scene.display(),
        rec.timings.total.as_secs_f64() * 1e3,
        rec.plan.len()
    );
    Ok(rec)
}

fn plan_file_name(scene: &str) -> String {
    let stem = Path::new(scene).file_stem().and_then(|s| s.to_str()).unwrap_or(scene);
    format!("{stem}.plan.json")
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<(), CliError> {
    if io::is_manifest(&a.input) {
        if a.pipeline.votes != "oracle" {
            return Err(CliError::Input(anyhow!("batch mode supports oracle votes only")));
        }
        let manifest = io::read_manifest(&a.input)?;
        let base = a.input.parent().unwrap_or(Path::new("."));
        std::fs::create_dir_all(&a.out)
            .with_context(|| format!("creating {}", a.out.display()))
            .map_err(CliError::Input)?;
        let flags = PipelineFlags { threads: 1, ..a.pipeline.clone() };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.pipeline.threads.max(1))
            .build()
            .map_err(|e| CliError::Internal(e.into()))?;
        let empties = pool.install(|| {
            manifest
                .samples
                .par_iter()
                .map(|s| {
                    let rec = run_pipeline(&base.join(&s.scene), &flags, s.seed)?;
                    io::write_floorplan(&a.out.join(plan_file_name(&s.scene)), &rec.plan)?;
                    Ok(rec.plan.is_empty())
                })
                .collect::<Result<Vec<bool>, CliError>>()
        })?;
        let n_empty = empties.iter().filter(|&&e| e).count();
        if n_empty > 0 {
            log::warn!("{n_empty} of {} scenes produced no rooms", empties.len());
        }
        return Ok(());
    }

    let rec = run_pipeline(&a.input, &a.pipeline, a.pipeline.seed)?;
    io::write_floorplan(&a.out, &rec.plan)?;
    if let Some(svg) = &a.svg {
        io::write_text(svg, &render_svg(&rec.plan))?;
    }
    if let Some(path) = &a.write_votes {
        io::write_votes(path, &rec.votes_in_input_frame())?;
    }
    if rec.plan.is_empty() {
        return Err(CliError::Empty);
    }
    Ok(())
}

const CSV_HEADER: &str = "id,seed,corner_precision,corner_recall,edge_precision,edge_recall,room_precision,room_recall";

fn csv_row(label: &str, seed: &str, r: &MetricsReport) -> String {
    let mut row = format!("{label},{seed}");
    for v in r.values() {
        let _ = write!(row, ",{v:.6}");
    }
    row
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => Ok(io::write_text(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let cfg = EvalConfig { grid: a.grid, ..EvalConfig::default() };
    cfg.validate().map_err(|e| CliError::Input(e.into()))?;
    if io::is_manifest(&a.gt) {
        let manifest = io::read_manifest(&a.gt)?;
        let base = a.gt.parent().unwrap_or(Path::new("."));
        let reports = manifest
            .samples
            .par_iter()
            .map(|s| {
                let gt = io::read_plan_any(&base.join(&s.scene))?;
                let pred = io::read_floorplan(&a.pred.join(plan_file_name(&s.scene)))?;
                evaluate(&gt, &pred, &cfg).map_err(|e| CliError::Input(e.into()))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for (s, r) in manifest.samples.iter().zip(&reports) {
            text.push_str(&csv_row(&s.id.to_string(), &s.seed.to_string(), r));
            text.push('\n');
        }
        if let Some(mean) = mean_report(&reports) {
            text.push_str(&csv_row("mean", "", &mean));
            text.push('\n');
        }
        return emit(&a.out, &text);
    }
    let gt = io::read_plan_any(&a.gt)?;
    let pred = io::read_plan_any(&a.pred)?;
    let report = evaluate(&gt, &pred, &cfg).map_err(|e| CliError::Input(e.into()))?;
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.into()))?;
    text.push('\n');
    emit(&a.out, &text)
}

fn cmd_render(a: &RenderArgs) -> Result<(), CliError> {
    let plan = io::read_plan_any(&a.plan)?;
    io::write_text(&a.svg, &render_svg(&plan))?;
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    if a.rooms == 0 || a.repeat == 0 || a.threads.contains(&0) {
        return Err(CliError::Input(anyhow!("rooms, repeat and threads must be positive")));
    }
    let scene = scene_with_rooms(a.rooms, a.seed, 200).map_err(|e| CliError::Input(e.into()))?;
    println!("scene: {} rooms, {} points", scene.plan.rooms.len(), scene.cloud.len());
    for &threads in &a.threads {
        let cfg = PipelineConfig { threads, ..PipelineConfig::default() };
        let mut best = f64::INFINITY;
        let mut rooms = 0;
        for _ in 0..a.repeat {
            let t = Instant::now();
            let rec = reconstruct(&scene.cloud, &VoteSource::Oracle(NoiseSpec::default()), &cfg).map_err(pipeline_error)?;
            best = best.min(t.elapsed().as_secs_f64());
            rooms = rec.plan.len();
        }
        println!("threads {threads}: {best:.4} s (best of {}), {rooms} rooms", a.repeat);
    }
    Ok(())
}
