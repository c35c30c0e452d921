//! Collecting room polygons into a floorplan and making rooms mutually
//! exclusive.

use crate::geom::{
    bounds_of, trace_outline, CellGrid, GeomError, GridTransform, NormalizeFrame, RasterMask, SimplePolygon, Vec2,
};

/// Default raster resolution for overlap resolution.
pub const DEFAULT_RESOLUTION: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub id: u32,
    pub polygon: SimplePolygon,
}

/// Rooms in a common frame. `frame` maps input coordinates to the frame the
/// rooms are expressed in (identity once mapped back to input space).
#[derive(Debug, Clone, PartialEq)]
pub struct Floorplan {
    pub rooms: Vec<Room>,
    pub frame: NormalizeFrame,
}

impl Default for Floorplan {
    fn default() -> Self {
        Self { rooms: Vec::new(), frame: NormalizeFrame::IDENTITY }
    }
}

impl Floorplan {
    pub fn len(&self) -> usize {
        self.rooms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rooms.is_empty()
    }

    /// Bounding box over all corners.
    pub fn bounds(&self) -> Option<(Vec2, Vec2)> {
        bounds_of(self.rooms.iter().flat_map(|r| r.polygon.corners().iter().copied()))
    }

    /// The same rooms expressed in input coordinates.
    pub fn to_input_frame(&self) -> Result<Floorplan, GeomError> {
        let rooms = self
            .rooms
            .iter()
            .map(|r| Ok(Room { id: r.id, polygon: r.polygon.map(|p| self.frame.invert2(p))? }))
            .collect::<Result<_, GeomError>>()?;
        Ok(Floorplan { rooms, frame: NormalizeFrame::IDENTITY })
    }
}

/// Collects polygons into a floorplan, ordered by room id.
pub fn assemble(room_polygons: Vec<(u32, SimplePolygon)>, frame: NormalizeFrame) -> Floorplan {
    let mut rooms: Vec<Room> = room_polygons.into_iter().map(|(id, polygon)| Room { id, polygon }).collect();
    rooms.sort_by_key(|r| r.id);
    Floorplan { rooms, frame }
}

fn joint_transform(plan: &Floorplan, resolution: usize) -> Option<GridTransform> {
    let (lo, hi) = plan.bounds()?;
    GridTransform::fit_box(lo, hi, resolution, 2.0).ok()
}

/// Rasterizes every room onto one grid. `None` when the plan has no extent.
pub fn rasterize_rooms(plan: &Floorplan, resolution: usize) -> Option<Vec<RasterMask>> {
    let t = joint_transform(plan, resolution)?;
    plan.rooms
        .iter()
        .map(|r| crate::geom::rasterize(&r.polygon, resolution, resolution, t).ok())
        .collect()
}

/// Gives every cell claimed by several rooms to the smallest-area claimant
/// (ties to the lowest id) and re-traces the rooms from their cells. A plan
/// without contested cells is returned unchanged. Rooms left without a
/// valid outline are dropped.
pub fn resolve_overlaps(plan: &Floorplan, resolution: usize) -> Floorplan {
    if plan.rooms.len() < 2 {
        return plan.clone();
    }
    let (Some(t), Some(masks)) = (joint_transform(plan, resolution), rasterize_rooms(plan, resolution)) else {
        return plan.clone();
    };
    let n_cells = resolution * resolution;
    let mut owner: Vec<Option<usize>> = vec![None; n_cells];
    let mut contested = false;

    let mut priority: Vec<usize> = (0..plan.rooms.len()).collect();
    priority.sort_by(|&a, &b| {
        let (ra, rb) = (&plan.rooms[a], &plan.rooms[b]);
        ra.polygon.area().total_cmp(&rb.polygon.area()).then(ra.id.cmp(&rb.id))
    });
    for &k in &priority {
        for (c, &set) in masks[k].cells().iter().enumerate() {
            if set {
                if owner[c].is_some() {
                    contested = true;
                } else {
                    owner[c] = Some(k);
                }
            }
        }
    }
    if !contested {
        return plan.clone();
    }

    let mut rooms = Vec::new();
    for (k, room) in plan.rooms.iter().enumerate() {
        let cells = CellGrid::from_fn(resolution, resolution, |i, j| owner[j * resolution + i] == Some(k));
        let simple = cells.simplified();
        let traced = trace_outline(&simple).and_then(|ring| {
            let corners: Vec<Vec2> = ring.iter().map(|&(i, j)| t.invert(Vec2::new(i as f64, j as f64))).collect();
            SimplePolygon::new(corners).ok()
        });
        match traced {
            Some(polygon) => rooms.push(Room { id: room.id, polygon }),
            None => log::warn!("room {} lost its whole area to overlapping rooms and was dropped", room.id),
        }
    }
    Floorplan { rooms, frame: plan.frame }
}
