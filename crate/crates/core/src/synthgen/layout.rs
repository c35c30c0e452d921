use rand::seq::IndexedRandom;
use rand::Rng;

use super::shapes::{build_shape_library, ShapeKernel};
use super::{stream_rng, SceneSpec, SynthError};
use crate::geom::CellGrid;

pub const GRID_SIZE: usize = 32;

/// Placement attempts allowed per additional room before giving up.
const MAX_TRIES_PER_ROOM: usize = 400;

/// 32×32 grid of optional room labels, addressed `(col, row)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    labels: Vec<Option<u32>>,
}

impl Default for OccupancyGrid {
    fn default() -> Self {
        Self { labels: vec![None; GRID_SIZE * GRID_SIZE] }
    }
}

impl OccupancyGrid {
    /// Builds a grid from rows of labels (`rows[row][col]`); any size up to 32×32.
    pub fn from_rows(rows: &[Vec<Option<u32>>]) -> Self {
        let mut g = Self::default();
        for (r, row) in rows.iter().enumerate() {
            for (c, &l) in row.iter().enumerate() {
                g.set(c, r, l);
            }
        }
        g
    }

    pub fn get(&self, col: i64, row: i64) -> Option<u32> {
        if col < 0 || row < 0 || col >= GRID_SIZE as i64 || row >= GRID_SIZE as i64 {
            return None;
        }
        self.labels[row as usize * GRID_SIZE + col as usize]
    }

    pub fn set(&mut self, col: usize, row: usize, label: Option<u32>) {
        self.labels[row * GRID_SIZE + col] = label;
    }

    /// Number of distinct labels (labels are contiguous from 0).
    pub fn room_count(&self) -> usize {
        self.labels.iter().flatten().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.iter().all(Option::is_none)
    }

    pub fn label_cells(&self, label: u32) -> CellGrid {
        CellGrid::from_fn(GRID_SIZE, GRID_SIZE, |c, r| self.labels[r * GRID_SIZE + c] == Some(label))
    }

    pub fn occupied(&self) -> CellGrid {
        CellGrid::from_fn(GRID_SIZE, GRID_SIZE, |c, r| self.labels[r * GRID_SIZE + c].is_some())
    }
}

/// Grows a layout from a centered seed shape by attaching library shapes to
/// free cells adjacent to occupied space.
///
/// On exhaustion the partial grid (at least one room) is returned inside
/// [`SynthError::PlacementExhausted`].
pub fn generate_layout(spec: &SceneSpec) -> Result<OccupancyGrid, SynthError> {
    spec.validate()?;
    let library: Vec<ShapeKernel> =
        build_shape_library().into_iter().filter(|k| k.corner_count() <= spec.max_shape_corners).collect();
    let mut rng = stream_rng(spec.rng_seed, 0);
    let target = rng.random_range(spec.n_rooms_min..=spec.n_rooms_max);

    let mut grid = OccupancyGrid::default();
    let first = library.choose(&mut rng).expect("library is non-empty");
    let (w, h) = extent(first);
    let (oc, or) = ((GRID_SIZE - w) / 2, (GRID_SIZE - h) / 2);
    let mut bbox = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
    for (c, r) in first.cells() {
        grid.set(oc + c, or + r, Some(0));
        bbox = grow(bbox, ((oc + c) as i64, (or + r) as i64));
    }
    let max_extent = spec.max_extent_cells as i64;

    let mut rooms = 1u32;
    let mut tries = 0usize;
    while (rooms as usize) < target {
        if tries >= MAX_TRIES_PER_ROOM {
            return Err(SynthError::PlacementExhausted(Box::new(grid)));
        }
        tries += 1;
        let frontier = frontier(&grid);
        let Some(&(fc, fr)) = frontier.choose(&mut rng) else {
            return Err(SynthError::PlacementExhausted(Box::new(grid)));
        };
        let shape = library.choose(&mut rng).expect("library is non-empty");
        let cells: Vec<(usize, usize)> = shape.cells().collect();
        let &(ac, ar) = cells.choose(&mut rng).expect("shape is non-empty");
        let (oc, or) = (fc as i64 - ac as i64, fr as i64 - ar as i64);
        let placed: Vec<(i64, i64)> = cells.iter().map(|&(c, r)| (oc + c as i64, or + r as i64)).collect();
        let fits = placed.iter().all(|&(c, r)| {
            c >= 0 && r >= 0 && c < GRID_SIZE as i64 && r < GRID_SIZE as i64 && grid.get(c, r).is_none()
        });
        let grown = placed.iter().fold(bbox, |b, &p| grow(b, p));
        if !fits || grown.2 - grown.0 >= max_extent || grown.3 - grown.1 >= max_extent {
            continue;
        }

        let merge = rng.random_bool(spec.super_room_prob);
        let label = if merge {
            let mut neighbours: Vec<u32> = placed
                .iter()
                .flat_map(|&(c, r)| [(c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)])
                .filter_map(|(c, r)| grid.get(c, r))
                .collect();
            neighbours.sort_unstable();
            neighbours.dedup();
            *neighbours.choose(&mut rng).expect("shape touches occupied space")
        } else {
            rooms
        };

        let mut candidate = grid.clone();
        for &(c, r) in &placed {
            candidate.set(c as usize, r as usize, Some(label));
        }
        if !candidate.label_cells(label).is_simple_region() {
            continue;
        }
        grid = candidate;
        bbox = grown;
        if !merge {
            rooms += 1;
        }
        tries = 0;
    }
    Ok(grid)
}

fn grow((c0, r0, c1, r1): (i64, i64, i64, i64), (c, r): (i64, i64)) -> (i64, i64, i64, i64) {
    (c0.min(c), r0.min(r), c1.max(c), r1.max(r))
}

fn extent(k: &ShapeKernel) -> (usize, usize) {
    let (mut w, mut h) = (0, 0);
    for (c, r) in k.cells() {
        w = w.max(c + 1);
        h = h.max(r + 1);
    }
    (w, h)
}

/// Free cells 4-adjacent to occupied space, in scan order.
fn frontier(grid: &OccupancyGrid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..GRID_SIZE as i64 {
        for c in 0..GRID_SIZE as i64 {
            if grid.get(c, r).is_none()
                && [(c + 1, r), (c - 1, r), (c, r + 1), (c, r - 1)]
                    .iter()
                    .any(|&(nc, nr)| grid.get(nc, nr).is_some())
            {
                out.push((c as usize, r as usize));
            }
        }
    }
    out
}
