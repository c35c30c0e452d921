//! Corner, edge and room precision/recall between a predicted and a
//! ground-truth floorplan, measured on a shared pixel grid.

mod hungarian;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::Floorplan;
use crate::geom::{bounds_of, mask_iou, rasterize, GeomError, GridTransform, RasterMask, Vec2};

pub use hungarian::min_cost_assignment;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("both floorplans are empty")]
    BothEmpty,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub grid: usize,
    pub corner_tol_px: f64,
    pub room_iou_thresh: f64,
    pub margin_px: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { grid: 256, corner_tol_px: 10.0, room_iou_thresh: 0.7, margin_px: 8 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.grid < 64 {
            return Err(MetricsError::InvalidConfig("grid must be at least 64"));
        }
        if !(self.corner_tol_px > 0.0) {
            return Err(MetricsError::InvalidConfig("corner tolerance must be positive"));
        }
        if !(self.room_iou_thresh > 0.0 && self.room_iou_thresh < 1.0) {
            return Err(MetricsError::InvalidConfig("room IOU threshold must lie in (0, 1)"));
        }
        if 2 * self.margin_px >= self.grid {
            return Err(MetricsError::InvalidConfig("margin leaves no room on the grid"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    /// `tp / (tp + fp)`, 1 when there are no predictions.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, 1 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub corner_precision: f64,
    pub corner_recall: f64,
    pub edge_precision: f64,
    pub edge_recall: f64,
    pub room_precision: f64,
    pub room_recall: f64,
    pub corners: Counts,
    pub edges: Counts,
    pub rooms: Counts,
}

impl MetricsReport {
    pub fn from_counts(corners: Counts, edges: Counts, rooms: Counts) -> Self {
        Self {
            corner_precision: corners.precision(),
            corner_recall: corners.recall(),
            edge_precision: edges.precision(),
            edge_recall: edges.recall(),
            room_precision: rooms.precision(),
            room_recall: rooms.recall(),
            corners,
            edges,
            rooms,
        }
    }

    /// The six ratios in table order.
    pub fn values(&self) -> [f64; 6] {
        [
            self.corner_precision,
            self.corner_recall,
            self.edge_precision,
            self.edge_recall,
            self.room_precision,
            self.room_recall,
        ]
    }
}

/// Per-room corner rings in pixel coordinates.
pub type PixelRooms = Vec<Vec<Vec2>>;

/// Maps both plans with one similarity transform that fits the union of
/// their corners into `[margin, grid - margin]²`.
pub fn joint_project(
    gt: &Floorplan,
    pred: &Floorplan,
    cfg: &EvalConfig,
) -> Result<(PixelRooms, PixelRooms, GridTransform), MetricsError> {
    let all = gt.rooms.iter().chain(&pred.rooms).flat_map(|r| r.polygon.corners().iter().copied());
    let (lo, hi) = bounds_of(all).ok_or(MetricsError::BothEmpty)?;
    let t = GridTransform::fit_box(lo, hi, cfg.grid, cfg.margin_px as f64)?;
    let project = |plan: &Floorplan| -> PixelRooms {
        plan.rooms.iter().map(|r| r.polygon.corners().iter().map(|&p| t.apply(p)).collect()).collect()
    };
    Ok((project(gt), project(pred), t))
}

/// One-to-one corner matching result over the flattened per-room corner lists.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerMatching {
    pub counts: Counts,
    /// For each flattened predicted corner, its true-positive GT partner.
    pub pred_to_gt: Vec<Option<usize>>,
}

fn flatten(rooms: &PixelRooms) -> Vec<Vec2> {
    rooms.iter().flatten().copied().collect()
}

/// Distance-minimizing assignment of predicted to GT corners; a pair is a
/// true positive when within `corner_tol_px`.
pub fn match_corners(gt_px: &PixelRooms, pred_px: &PixelRooms, cfg: &EvalConfig) -> CornerMatching {
    let g = flatten(gt_px);
    let p = flatten(pred_px);
    let cost: Vec<Vec<f64>> = p.iter().map(|a| g.iter().map(|b| a.dist(*b)).collect()).collect();
    let assignment = if g.is_empty() { vec![None; p.len()] } else { min_cost_assignment(&cost) };
    let pred_to_gt: Vec<Option<usize>> = assignment
        .iter()
        .enumerate()
        .map(|(i, a)| a.filter(|&j| cost[i][j] <= cfg.corner_tol_px))
        .collect();
    let tp = pred_to_gt.iter().flatten().count();
    CornerMatching { counts: Counts { tp, fp: p.len() - tp, fn_: g.len() - tp }, pred_to_gt }
}

/// Edges as unordered pairs of flattened corner indices.
fn edges(rooms: &PixelRooms) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut base = 0;
    for r in rooms {
        let n = r.len();
        for k in 0..n {
            let (a, b) = (base + k, base + (k + 1) % n);
            out.push((a.min(b), a.max(b)));
        }
        base += n;
    }
    out
}

/// GT corners sharing a position (walls shared by adjacent rooms) are one
/// corner for edge purposes: index of the first GT corner at the same spot.
fn coincident_classes(g: &[Vec2]) -> Vec<usize> {
    (0..g.len()).map(|j| (0..=j).find(|&k| g[k].dist(g[j]) <= COINCIDENT_PX).unwrap_or(j)).collect()
}

const COINCIDENT_PX: f64 = 1e-6;

/// A predicted edge is a true positive when both corners are matched and
/// their GT partners span a GT edge. Each GT edge absorbs at most one hit.
pub fn match_edges(gt_px: &PixelRooms, pred_px: &PixelRooms, corners: &CornerMatching) -> Counts {
    let class = coincident_classes(&flatten(gt_px));
    let key = |a: usize, b: usize| {
        let (a, b) = (class[a], class[b]);
        (a.min(b), a.max(b))
    };
    let gt_edges = edges(gt_px);
    let mut available: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in &gt_edges {
        *available.entry(key(a, b)).or_default() += 1;
    }
    let pred_edges = edges(pred_px);
    let mut tp = 0;
    for &(a, b) in &pred_edges {
        if let (Some(ga), Some(gb)) = (corners.pred_to_gt[a], corners.pred_to_gt[b]) {
            if let Some(left) = available.get_mut(&key(ga, gb)).filter(|n| **n > 0) {
                *left -= 1;
                tp += 1;
            }
        }
    }
    Counts { tp, fp: pred_edges.len() - tp, fn_: gt_edges.len() - tp }
}

fn masks(plan: &Floorplan, t: GridTransform, grid: usize) -> Result<Vec<RasterMask>, MetricsError> {
    Ok(plan.rooms.iter().map(|r| rasterize(&r.polygon, grid, grid, t)).collect::<Result<_, _>>()?)
}

/// Greedy room matching in decreasing IOU; each GT room matches once.
pub fn match_rooms(gt: &Floorplan, pred: &Floorplan, cfg: &EvalConfig) -> Result<Counts, MetricsError> {
    if gt.is_empty() && pred.is_empty() {
        return Ok(Counts::default());
    }
    let (_, _, t) = joint_project(gt, pred, cfg)?;
    let gm = masks(gt, t, cfg.grid)?;
    let pm = masks(pred, t, cfg.grid)?;
    let mut pairs = Vec::new();
    for (i, p) in pm.iter().enumerate() {
        for (j, g) in gm.iter().enumerate() {
            let iou = mask_iou(p, g)?;
            if iou > cfg.room_iou_thresh {
                pairs.push((iou, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pm.len()];
    let mut used_g = vec![false; gm.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            tp += 1;
        }
    }
    Ok(Counts { tp, fp: pm.len() - tp, fn_: gm.len() - tp })
}

/// All six metrics for one prediction.
pub fn evaluate(gt: &Floorplan, pred: &Floorplan, cfg: &EvalConfig) -> Result<MetricsReport, MetricsError> {
    cfg.validate()?;
    let (gpx, ppx, _) = joint_project(gt, pred, cfg)?;
    let corners = match_corners(&gpx, &ppx, cfg);
    let edges = match_edges(&gpx, &ppx, &corners);
    let rooms = match_rooms(gt, pred, cfg)?;
    Ok(MetricsReport::from_counts(corners.counts, edges, rooms))
}

/// Mean of each ratio over a batch of reports (counts summed).
pub fn mean_report(reports: &[MetricsReport]) -> Option<MetricsReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let sum = |f: fn(&MetricsReport) -> Counts| {
        reports.iter().map(f).fold(Counts::default(), |a, c| Counts { tp: a.tp + c.tp, fp: a.fp + c.fp, fn_: a.fn_ + c.fn_ })
    };
    Some(MetricsReport {
        corner_precision: mean(|r| r.corner_precision),
        corner_recall: mean(|r| r.corner_recall),
        edge_precision: mean(|r| r.edge_precision),
        edge_recall: mean(|r| r.edge_recall),
        room_precision: mean(|r| r.room_precision),
        room_recall: mean(|r| r.room_recall),
        corners: sum(|r| r.corners),
        edges: sum(|r| r.edges),
        rooms: sum(|r| r.rooms),
    })
}
