use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::layout::{OccupancyGrid, GRID_SIZE};
use super::{stream_rng, GroundTruthPlan, GtRoom, LabeledPointCloud, PointLabels, SceneSpec, SynthError};
use crate::geom::{trace_outline, SimplePolygon, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Runs along a vertical grid line `x = line`.
    Vertical,
    /// Runs along a horizontal grid line `y = line`.
    Horizontal,
}

/// A maximal run of grid edges on one grid line separating the same ordered
/// pair of regions (`None` is empty space).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridRun {
    pub axis: Axis,
    pub line: usize,
    pub from: usize,
    pub to: usize,
    /// Region on the negative side (left of a vertical line, below a horizontal one).
    pub low: Option<u32>,
    pub high: Option<u32>,
}

impl GridRun {
    /// Room labels carried by points on this wall, smaller first; equal for
    /// exterior walls.
    pub fn room_labels(&self) -> (u32, u32) {
        match (self.low, self.high) {
            (Some(a), Some(b)) => (a.min(b), a.max(b)),
            (Some(a), None) | (None, Some(a)) => (a, a),
            (None, None) => unreachable!("runs separate at least one room"),
        }
    }
}

/// Enumerates wall runs: vertical lines first, then horizontal, each scanned
/// in increasing order.
pub fn wall_runs(grid: &OccupancyGrid) -> Vec<GridRun> {
    let mut runs = Vec::new();
    for axis in [Axis::Vertical, Axis::Horizontal] {
        for line in 0..=GRID_SIZE {
            let mut current: Option<GridRun> = None;
            for t in 0..GRID_SIZE {
                let (low, high) = match axis {
                    Axis::Vertical => (grid.get(line as i64 - 1, t as i64), grid.get(line as i64, t as i64)),
                    Axis::Horizontal => (grid.get(t as i64, line as i64 - 1), grid.get(t as i64, line as i64)),
                };
                let boundary = low != high;
                match current.as_mut() {
                    Some(run) if boundary && run.low == low && run.high == high => run.to = t + 1,
                    _ => {
                        if let Some(run) = current.take() {
                            runs.push(run);
                        }
                        if boundary {
                            current = Some(GridRun { axis, line, from: t, to: t + 1, low, high });
                        }
                    }
                }
            }
            if let Some(run) = current {
                runs.push(run);
            }
        }
    }
    runs
}

/// Cumulative vertex coordinates of randomly scaled rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl ScaledGrid {
    pub fn uniform() -> Self {
        let v: Vec<f64> = (0..=GRID_SIZE).map(|i| i as f64).collect();
        Self { xs: v.clone(), ys: v }
    }

    pub fn vertex(&self, col: i64, row: i64) -> Vec2 {
        Vec2::new(self.xs[col as usize], self.ys[row as usize])
    }

    pub fn run_endpoints(&self, run: &GridRun) -> (Vec2, Vec2) {
        match run.axis {
            Axis::Vertical => (
                Vec2::new(self.xs[run.line], self.ys[run.from]),
                Vec2::new(self.xs[run.line], self.ys[run.to]),
            ),
            Axis::Horizontal => (
                Vec2::new(self.xs[run.from], self.ys[run.line]),
                Vec2::new(self.xs[run.to], self.ys[run.line]),
            ),
        }
    }
}

/// Axis-aligned rectangle removed from one wall plane, in wall-local
/// coordinates (`u` along the wall from its start, `z` up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutout {
    pub wall: usize,
    pub u: (f64, f64),
    pub z: (f64, f64),
}

/// Ground-truth room outlines on a scaled grid.
pub fn ground_truth(grid: &OccupancyGrid, scaled: &ScaledGrid) -> Result<GroundTruthPlan, SynthError> {
    let mut rooms = Vec::new();
    for label in 0..grid.room_count() as u32 {
        let cells = grid.label_cells(label);
        let ring = trace_outline(&cells).ok_or(SynthError::MissingLabel(label))?;
        let corners = ring.iter().map(|&(c, r)| scaled.vertex(c, r)).collect();
        let polygon = SimplePolygon::new(corners).map_err(|e| SynthError::InvalidRoom(label, e))?;
        rooms.push(GtRoom { label, polygon });
    }
    Ok(GroundTruthPlan { rooms })
}

/// Turns an occupancy grid into a labeled wall point cloud plus its
/// ground-truth plan (pre-augmentation, grid units).
pub fn grid_to_scene(
    grid: &OccupancyGrid,
    spec: &SceneSpec,
) -> Result<(LabeledPointCloud, GroundTruthPlan), SynthError> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(SynthError::EmptyGrid);
    }
    let mut rng = stream_rng(spec.rng_seed, 1);

    let widths = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        let mut acc = vec![0.0];
        for _ in 0..GRID_SIZE {
            let (lo, hi) = spec.cell_scale_range;
            let w = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            acc.push(acc.last().unwrap() + w);
        }
        acc
    };
    let xs = widths(&mut rng);
    let ys = widths(&mut rng);
    let scaled = ScaledGrid { xs, ys };

    let runs = wall_runs(grid);
    let height = spec.wall_height;

    let n_cut = rng.random_range(spec.cutout_count_range.0..=spec.cutout_count_range.1);
    let mut cutouts = Vec::with_capacity(n_cut);
    for _ in 0..n_cut {
        let wall = rng.random_range(0..runs.len());
        let (a, b) = scaled.run_endpoints(&runs[wall]);
        let len = a.dist(b);
        let (lo, hi) = spec.cutout_size_range;
        let mut frac = || if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let (w, h) = (frac() * len, frac() * height);
        let u0 = rng.random_range(0.0..=(len - w).max(0.0));
        let z0 = rng.random_range(0.0..=(height - h).max(0.0));
        cutouts.push(Cutout { wall, u: (u0, u0 + w), z: (z0, z0 + h) });
    }

    let jitter = (spec.point_jitter > 0.0).then(|| Normal::new(0.0, spec.point_jitter).expect("finite sigma"));
    let mut points = Vec::new();
    let (mut l0, mut l1, mut wl) = (Vec::new(), Vec::new(), Vec::new());
    for (id, run) in runs.iter().enumerate() {
        let (a, b) = scaled.run_endpoints(run);
        let len = a.dist(b);
        let dir = (b - a) / len;
        let expected = spec.points_per_wall_density * len * height;
        let mut n = expected.floor() as usize;
        if rng.random_bool((expected - n as f64).clamp(0.0, 1.0)) {
            n += 1;
        }
        let (ra, rb) = run.room_labels();
        for _ in 0..n {
            let u = rng.random_range(0.0..len);
            let z = rng.random_range(0.0..height);
            let cut = cutouts
                .iter()
                .any(|c| c.wall == id && u >= c.u.0 && u <= c.u.1 && z >= c.z.0 && z <= c.z.1);
            let xy = a + dir * u;
            let mut p = Vec3::new(xy.x, xy.y, z);
            if let Some(noise) = &jitter {
                p = p + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
            }
            if cut {
                continue;
            }
            points.push(p);
            l0.push(ra);
            l1.push(rb);
            wl.push(id as u32);
        }
    }

    let plan = ground_truth(grid, &scaled)?;
    let cloud = LabeledPointCloud {
        points,
        labels: Some(PointLabels { room_label_0: l0, room_label_1: l1, wall_label: wl }),
    };
    Ok((cloud, plan))
}
