//! End-to-end reconstruction: point cloud and votes in, floorplan out.

use std::time::{Duration, Instant};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{assemble, resolve_overlaps, Floorplan, DEFAULT_RESOLUTION};
use crate::cluster::{
    backtrack_labels, dbscan, intersect_rooms_walls, prune_spurious, ClusterError, DbscanParams, ROOM_PRUNE_FRACTION,
    WALL_PRUNE_FRACTION,
};
use crate::geom::{GeomError, NormalizeFrame, Vec2, Vec3};
use crate::perimeter::{estimate_room_perimeter_detailed, PerimeterConfig, PerimeterDetail, PerimeterError};
use crate::synthgen::{stream_rng, LabeledPointCloud};
use crate::votes::{oracle_votes, subsample_seeds, NoiseSpec, SeedSet, VoteError, VoteSet};

/// Tolerance when checking a votes file's seed positions against the cloud.
const SEED_POSITION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("point cloud is empty or has no horizontal extent")]
    EmptyScene,
    #[error("votes do not match the scene: {0}")]
    VoteMismatch(String),
    #[error(transparent)]
    Votes(#[from] VoteError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Input clouds larger than this are randomly subsampled.
    pub n_points: usize,
    pub n_seeds: usize,
    pub room_dbscan: DbscanParams,
    pub wall_dbscan: DbscanParams,
    pub room_prune_fraction: f64,
    pub wall_prune_fraction: f64,
    pub perimeter: PerimeterConfig,
    pub overlap_resolution: usize,
    pub threads: usize,
    pub subsample_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            n_points: 16384,
            n_seeds: 1024,
            room_dbscan: DbscanParams::ROOM,
            wall_dbscan: DbscanParams::WALL,
            room_prune_fraction: ROOM_PRUNE_FRACTION,
            wall_prune_fraction: WALL_PRUNE_FRACTION,
            perimeter: PerimeterConfig::default(),
            overlap_resolution: DEFAULT_RESOLUTION,
            threads: 1,
            subsample_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        if self.n_points == 0 || self.n_seeds == 0 {
            return bad("n_points and n_seeds must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be at least 1");
        }
        if self.overlap_resolution < 2 {
            return bad("overlap_resolution must be at least 2");
        }
        for f in [self.room_prune_fraction, self.wall_prune_fraction] {
            if !(0.0..=1.0).contains(&f) {
                return bad("prune fractions must lie in [0, 1]");
            }
        }
        self.room_dbscan.validate()?;
        self.wall_dbscan.validate()?;
        self.perimeter.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Where the votes come from.
#[derive(Debug, Clone)]
pub enum VoteSource {
    /// Label-derived votes, optionally perturbed.
    Oracle(NoiseSpec),
    /// Precomputed votes in the input frame; seed indices refer to the
    /// input cloud as given.
    Provided(VoteSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoomDiagnostics {
    /// Cluster id of the room; equals the room id in the plan when the
    /// room survived.
    pub cluster: u32,
    pub n_seeds: usize,
    pub n_wall_sets: usize,
    pub detail: PerimeterDetail,
}

impl RoomDiagnostics {
    pub fn error(&self) -> Option<&PerimeterError> {
        self.detail.polygon.as_ref().err()
    }
}

/// Wall-clock time of each stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub stages: Vec<(&'static str, Duration)>,
    pub total: Duration,
}

impl StageTimings {
    pub fn sum(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

struct Clock {
    start: Instant,
    last: Instant,
    timings: StageTimings,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self { start: now, last: now, timings: StageTimings::default() }
    }

    fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        let d = now - self.last;
        log::debug!("stage {name}: {:.3} ms", d.as_secs_f64() * 1e3);
        self.timings.stages.push((name, d));
        self.last = now;
    }

    fn finish(mut self) -> StageTimings {
        self.timings.total = self.last - self.start;
        self.timings
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Rooms in input coordinates.
    pub plan: Floorplan,
    /// Rooms in the normalized frame (`plan.frame` maps input to it).
    pub normalized: Floorplan,
    /// The votes used, in the normalized frame; seed indices refer to the
    /// input cloud.
    pub votes: VoteSet,
    pub rooms: Vec<RoomDiagnostics>,
    pub timings: StageTimings,
}

impl Reconstruction {
    /// The votes mapped back to input coordinates, suitable for feeding
    /// back in as [`VoteSource::Provided`].
    pub fn votes_in_input_frame(&self) -> VoteSet {
        let f = self.plan_frame();
        let map = |v: &[Vec3]| v.iter().map(|&p| f.invert(p)).collect();
        VoteSet {
            seeds: SeedSet { indices: self.votes.seeds.indices.clone(), positions: map(&self.votes.seeds.positions) },
            room_vote_0: map(&self.votes.room_vote_0),
            room_vote_1: map(&self.votes.room_vote_1),
            wall_vote: map(&self.votes.wall_vote),
        }
    }

    /// Frame mapping input coordinates to the normalized frame.
    pub fn plan_frame(&self) -> NormalizeFrame {
        self.normalized.frame
    }
}

fn check_provided(votes: &VoteSet, cloud: &LabeledPointCloud) -> Result<(), PipelineError> {
    votes.validate().map_err(|e| PipelineError::VoteMismatch(e.to_string()))?;
    if votes.is_empty() {
        return Err(PipelineError::VoteMismatch("no seeds".into()));
    }
    for (&i, &p) in votes.seeds.indices.iter().zip(&votes.seeds.positions) {
        let Some(&q) = cloud.points.get(i) else {
            return Err(PipelineError::VoteMismatch(format!(
                "seed index {i} out of range for {} points",
                cloud.len()
            )));
        };
        if q.dist(p) > SEED_POSITION_TOL * (1.0 + q.norm()) {
            return Err(PipelineError::VoteMismatch(format!("seed {i} position does not match the cloud")));
        }
    }
    Ok(())
}

fn normalize_votes(votes: &VoteSet, frame: &NormalizeFrame) -> VoteSet {
    let map = |v: &[Vec3]| v.iter().map(|&p| frame.apply(p)).collect();
    VoteSet {
        seeds: SeedSet { indices: votes.seeds.indices.clone(), positions: map(&votes.seeds.positions) },
        room_vote_0: map(&votes.room_vote_0),
        room_vote_1: map(&votes.room_vote_1),
        wall_vote: map(&votes.wall_vote),
    }
}

/// Reconstructs a floorplan. An empty plan (no room survived) is a valid
/// result, not an error.
pub fn reconstruct(
    cloud: &LabeledPointCloud,
    source: &VoteSource,
    cfg: &PipelineConfig,
) -> Result<Reconstruction, PipelineError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    pool.install(|| run(cloud, source, cfg))
}

fn run(cloud: &LabeledPointCloud, source: &VoteSource, cfg: &PipelineConfig) -> Result<Reconstruction, PipelineError> {
    let mut clock = Clock::new();
    if let VoteSource::Provided(votes) = source {
        check_provided(votes, cloud)?;
    }
    let frame = NormalizeFrame::fit(&cloud.points).ok_or(PipelineError::EmptyScene)?;
    clock.lap("normalize");

    let votes = match source {
        VoteSource::Provided(votes) => normalize_votes(votes, &frame),
        VoteSource::Oracle(noise) => {
            let (sub, kept) = if cloud.len() > cfg.n_points {
                let mut rng = stream_rng(cfg.subsample_seed, 0);
                let mut keep = index::sample(&mut rng, cloud.len(), cfg.n_points).into_vec();
                keep.sort_unstable();
                (cloud.select(&keep), Some(keep))
            } else {
                (cloud.clone(), None)
            };
            let normalized = LabeledPointCloud {
                points: sub.points.iter().map(|&p| frame.apply(p)).collect(),
                labels: sub.labels,
            };
            let seeds = subsample_seeds(&normalized.points, cfg.n_seeds.min(normalized.len()))?;
            clock.lap("seeds");
            let mut votes = oracle_votes(&normalized, &seeds, noise)?;
            // Report seeds by their index in the cloud as given.
            if let Some(kept) = kept {
                for i in &mut votes.seeds.indices {
                    *i = kept[*i];
                }
            }
            votes
        }
    };
    clock.lap("votes");

    let m = votes.len();
    let room_votes: Vec<Vec3> = votes.room_vote_0.iter().chain(&votes.room_vote_1).copied().collect();
    let room_assign = dbscan(&room_votes, &cfg.room_dbscan)?;
    let wall_assign = dbscan(&votes.wall_vote, &cfg.wall_dbscan)?;
    clock.lap("cluster");

    let labels = backtrack_labels(m, &room_assign, &wall_assign)?;
    let labels = prune_spurious(&labels, m, cfg.room_prune_fraction, cfg.wall_prune_fraction);
    let sets = intersect_rooms_walls(&labels);
    log::info!(
        "{} room clusters, {} wall clusters after pruning ({} / {} before)",
        labels.n_rooms,
        labels.n_walls,
        room_assign.n_clusters,
        wall_assign.n_clusters
    );
    clock.lap("assign");

    let positions = &votes.seeds.positions;
    let rooms: Vec<RoomDiagnostics> = sets
        .walls_per_room
        .par_iter()
        .enumerate()
        .map(|(k, walls)| {
            let wall_points: Vec<(u32, Vec<Vec2>)> =
                walls.iter().map(|(w, seeds)| (*w, seeds.iter().map(|&i| positions[i].xy()).collect())).collect();
            RoomDiagnostics {
                cluster: k as u32,
                n_seeds: sets.rooms[k].len(),
                n_wall_sets: walls.len(),
                detail: estimate_room_perimeter_detailed(&wall_points, &cfg.perimeter),
            }
        })
        .collect();
    clock.lap("perimeter");

    let polygons = rooms
        .iter()
        .filter_map(|r| match &r.detail.polygon {
            Ok(p) => Some((r.cluster, p.clone())),
            Err(e) => {
                log::warn!("room {} dropped: {e}", r.cluster);
                None
            }
        })
        .collect();
    let normalized = resolve_overlaps(&assemble(polygons, frame), cfg.overlap_resolution);
    let plan = normalized.to_input_frame()?;
    clock.lap("assemble");

    Ok(Reconstruction { plan, normalized, votes, rooms, timings: clock.finish() })
}
