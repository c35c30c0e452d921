//! Procedural synthetic scenes: room layouts on an occupancy grid, sampled
//! wall point clouds with room/wall labels, and matching ground-truth plans.

mod layout;
mod scene;
mod shapes;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{GeomError, NormalizeFrame, SimplePolygon, Vec2, Vec3, NORMALIZED_EXTENT};

pub use layout::{generate_layout, OccupancyGrid, GRID_SIZE};
pub use scene::{ground_truth, grid_to_scene, wall_runs, Axis, Cutout, GridRun, ScaledGrid};
pub use shapes::{build_shape_library, ShapeKernel};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scene spec: {0}")]
    InvalidSpec(&'static str),
    #[error("no legal placement found after bounded retries")]
    PlacementExhausted(Box<OccupancyGrid>),
    #[error("occupancy grid is empty")]
    EmptyGrid,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("room label {0} has no cells")]
    MissingLabel(u32),
    #[error("room {0} outline is not a valid polygon: {1}")]
    InvalidRoom(u32, GeomError),
}

/// Parameters of the scene generator. Lengths before normalization are in
/// grid-cell units (one cell is nominally one meter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub n_rooms_min: usize,
    pub n_rooms_max: usize,
    pub super_room_prob: f64,
    /// Library shapes whose outline has more corners than this are not used.
    pub max_shape_corners: usize,
    /// Bound on the occupied bounding box, in cells per side.
    pub max_extent_cells: usize,
    /// Points per unit of wall area.
    pub points_per_wall_density: f64,
    pub cutout_count_range: (usize, usize),
    /// Cutout size as a fraction of the wall's length and height.
    pub cutout_size_range: (f64, f64),
    pub wall_height: f64,
    /// Rotation about Z in degrees.
    pub rotation_range: (f64, f64),
    pub axis_scale_range: (f64, f64),
    /// Random width of each grid row and column.
    pub cell_scale_range: (f64, f64),
    /// Gaussian jitter added to sampled points (per coordinate).
    pub point_jitter: f64,
    pub rng_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_rooms_min: 1,
            n_rooms_max: 10,
            super_room_prob: 0.2,
            max_shape_corners: 6,
            max_extent_cells: 8,
            points_per_wall_density: 400.0,
            cutout_count_range: (0, 3),
            cutout_size_range: (0.1, 0.4),
            wall_height: 1.0,
            rotation_range: (0.0, 0.0),
            axis_scale_range: (0.9, 1.1),
            cell_scale_range: (0.9, 1.1),
            point_jitter: 0.0,
            rng_seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { rng_seed: seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi;
        if self.n_rooms_min < 1 || self.n_rooms_min > self.n_rooms_max {
            return Err(SynthError::InvalidSpec("need 1 <= n_rooms_min <= n_rooms_max"));
        }
        if self.max_shape_corners < 4 {
            return Err(SynthError::InvalidSpec("max_shape_corners must be at least 4"));
        }
        if !(3..=GRID_SIZE).contains(&self.max_extent_cells) {
            return Err(SynthError::InvalidSpec("max_extent_cells must lie in 3..=32"));
        }
        if !(0.0..=1.0).contains(&self.super_room_prob) {
            return Err(SynthError::InvalidSpec("super_room_prob must lie in [0, 1]"));
        }
        if !(self.points_per_wall_density > 0.0 && self.points_per_wall_density.is_finite()) {
            return Err(SynthError::InvalidSpec("points_per_wall_density must be positive"));
        }
        if self.cutout_count_range.0 > self.cutout_count_range.1 {
            return Err(SynthError::InvalidSpec("cutout_count_range is empty"));
        }
        let (clo, chi) = self.cutout_size_range;
        if !range_ok(self.cutout_size_range) || clo < 0.0 || chi > 1.0 {
            return Err(SynthError::InvalidSpec("cutout_size_range must be a sub-range of [0, 1]"));
        }
        if !(self.wall_height > 0.0 && self.wall_height.is_finite()) {
            return Err(SynthError::InvalidSpec("wall_height must be positive"));
        }
        if !range_ok(self.rotation_range) {
            return Err(SynthError::InvalidSpec("rotation_range is empty"));
        }
        if !range_ok(self.axis_scale_range) || self.axis_scale_range.0 <= 0.0 {
            return Err(SynthError::InvalidSpec("axis_scale_range must be positive and non-empty"));
        }
        if !range_ok(self.cell_scale_range) || self.cell_scale_range.0 <= 0.0 {
            return Err(SynthError::InvalidSpec("cell_scale_range must be positive and non-empty"));
        }
        if !(self.point_jitter >= 0.0 && self.point_jitter.is_finite()) {
            return Err(SynthError::InvalidSpec("point_jitter must be non-negative"));
        }
        Ok(())
    }
}

/// Independent deterministic random stream `stream` derived from `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-point ground-truth labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PointLabels {
    pub room_label_0: Vec<u32>,
    pub room_label_1: Vec<u32>,
    pub wall_label: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledPointCloud {
    pub points: Vec<Vec3>,
    pub labels: Option<PointLabels>,
}

impl LabeledPointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> LabeledPointCloud {
        let pick = |v: &Vec<u32>| indices.iter().map(|&i| v[i]).collect();
        LabeledPointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            labels: self.labels.as_ref().map(|l| PointLabels {
                room_label_0: pick(&l.room_label_0),
                room_label_1: pick(&l.room_label_1),
                wall_label: pick(&l.wall_label),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtRoom {
    pub label: u32,
    pub polygon: SimplePolygon,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruthPlan {
    pub rooms: Vec<GtRoom>,
}

/// A generated scene in the normalized frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub cloud: LabeledPointCloud,
    pub plan: GroundTruthPlan,
}

fn sample(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Frame mapping the joint XY bounds of the cloud and the plan into
/// `[0, 2]²` and the lowest point to `z = 0`.
fn joint_frame(cloud: &LabeledPointCloud, plan: &GroundTruthPlan) -> Option<NormalizeFrame> {
    let mut all: Vec<Vec3> = cloud.points.clone();
    let z0 = cloud.points.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    for room in &plan.rooms {
        all.extend(room.polygon.corners().iter().map(|c| Vec3::new(c.x, c.y, z0)));
    }
    NormalizeFrame::fit(&all)
}

/// Applies a random rotation about Z and per-axis scaling to points and
/// plan alike, then normalizes both into the `[0, 2]²` box.
pub fn augment_and_normalize(
    cloud: LabeledPointCloud,
    plan: GroundTruthPlan,
    spec: &SceneSpec,
) -> Result<(LabeledPointCloud, GroundTruthPlan), SynthError> {
    spec.validate()?;
    if cloud.is_empty() {
        return Err(SynthError::EmptyCloud);
    }
    let mut rng = stream_rng(spec.rng_seed, 2);
    let theta = sample(&mut rng, spec.rotation_range).to_radians();
    let sx = sample(&mut rng, spec.axis_scale_range);
    let sy = sample(&mut rng, spec.axis_scale_range);
    let sz = sample(&mut rng, spec.axis_scale_range);
    let (sin, cos) = theta.sin_cos();
    let xy = |p: Vec2| Vec2::new((cos * p.x - sin * p.y) * sx, (sin * p.x + cos * p.y) * sy);

    let cloud = LabeledPointCloud {
        points: cloud
            .points
            .iter()
            .map(|p| {
                let q = xy(p.xy());
                Vec3::new(q.x, q.y, p.z * sz)
            })
            .collect(),
        labels: cloud.labels,
    };
    let plan = map_plan(&plan, xy)?;
    normalize(cloud, plan)
}

fn map_plan(plan: &GroundTruthPlan, f: impl Fn(Vec2) -> Vec2) -> Result<GroundTruthPlan, SynthError> {
    let rooms = plan
        .rooms
        .iter()
        .map(|r| {
            let polygon = r.polygon.map(&f).map_err(|e| SynthError::InvalidRoom(r.label, e))?;
            Ok(GtRoom { label: r.label, polygon })
        })
        .collect::<Result<_, SynthError>>()?;
    Ok(GroundTruthPlan { rooms })
}

/// Translates and uniformly scales cloud and plan into the normalized box.
pub fn normalize(
    cloud: LabeledPointCloud,
    plan: GroundTruthPlan,
) -> Result<(LabeledPointCloud, GroundTruthPlan), SynthError> {
    let frame = joint_frame(&cloud, &plan).ok_or(SynthError::EmptyCloud)?;
    let plan = map_plan(&plan, |p| frame.apply2(p))?;
    let points = cloud
        .points
        .iter()
        .map(|&p| {
            let q = frame.apply(p);
            // Clamp rounding spill so the box bound holds exactly.
            Vec3::new(q.x.clamp(0.0, NORMALIZED_EXTENT), q.y.clamp(0.0, NORMALIZED_EXTENT), q.z.max(0.0))
        })
        .collect();
    Ok((LabeledPointCloud { points, labels: cloud.labels }, plan))
}

/// Full generator: layout, wall sampling, augmentation, normalization.
/// A layout that ran out of placements is used as built so far.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene, SynthError> {
    let grid = match generate_layout(spec) {
        Ok(g) => g,
        Err(SynthError::PlacementExhausted(g)) => {
            log::debug!("layout placement exhausted at {} rooms", g.room_count());
            *g
        }
        Err(e) => return Err(e),
    };
    let (cloud, plan) = grid_to_scene(&grid, spec)?;
    let (cloud, plan) = augment_and_normalize(cloud, plan, spec)?;
    Ok(Scene { cloud, plan })
}

/// A scene with exactly `n_rooms` rooms and no extent bound, found by
/// trying seeds `seed, seed + 1, ...` (at most `attempts` of them).
pub fn scene_with_rooms(n_rooms: usize, seed: u64, attempts: usize) -> Result<Scene, SynthError> {
    for k in 0..attempts as u64 {
        let spec = SceneSpec {
            n_rooms_min: n_rooms,
            n_rooms_max: n_rooms,
            max_extent_cells: GRID_SIZE,
            ..SceneSpec::with_seed(seed.wrapping_add(k))
        };
        let scene = generate_scene(&spec)?;
        if scene.plan.rooms.len() == n_rooms {
            return Ok(scene);
        }
    }
    Err(SynthError::InvalidSpec("no seed produced the requested room count"))
}
