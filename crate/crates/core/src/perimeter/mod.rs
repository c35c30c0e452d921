//! Per-room perimeter estimation: fit a segment to every wall, drop
//! duplicates, snap near-axis segments, order them into a closed tour and
//! extrude corners from consecutive supporting lines.

mod extrude;
mod tour;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{fit_line_ransac, project_segment, GeomError, Line2, Segment2, SimplePolygon, Vec2};

pub use extrude::{extrude_polygon, join, tour_joins, Join};
pub use tour::{node_cost, order_segments_2opt, order_segments_traced, sequence_cost, tour_cost, PerimeterPath, TourTrace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerimeterError {
    #[error("need at least two wall segments, got {0}")]
    TooFewSegments(usize),
    #[error("extruded polygon is self-intersecting")]
    SelfIntersecting,
    #[error("extruded polygon is degenerate: {0}")]
    Degenerate(GeomError),
    #[error("tour does not keep segment endpoints adjacent")]
    NotPairAdjacent,
    #[error("invalid perimeter config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub inlier_tol: f64,
    pub iterations: usize,
    pub rng_seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self { inlier_tol: 0.02, iterations: 500, rng_seed: 0 }
    }
}

/// Angles in degrees, lengths in normalized scene units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerimeterConfig {
    pub theta_min: f64,
    pub beta_min: f64,
    pub theta_orth: f64,
    pub ransac: RansacConfig,
    pub parallel_corner_angle: f64,
    /// Lower bound on how far an intersection corner may lie from the
    /// facing endpoints before falling back to their midpoint.
    pub max_corner_reach: f64,
    /// Offset below which near-parallel consecutive segments continue the
    /// same wall line.
    pub collinear_tol: f64,
}

impl Default for PerimeterConfig {
    fn default() -> Self {
        Self {
            theta_min: 15.0,
            beta_min: 0.15,
            theta_orth: 15.0,
            ransac: RansacConfig::default(),
            parallel_corner_angle: 10.0,
            max_corner_reach: 0.5,
            collinear_tol: 0.03,
        }
    }
}

impl PerimeterConfig {
    pub fn validate(&self) -> Result<(), PerimeterError> {
        let angle_ok = |a: f64| a > 0.0 && a < 45.0;
        if !(angle_ok(self.theta_min) && angle_ok(self.theta_orth) && angle_ok(self.parallel_corner_angle)) {
            return Err(PerimeterError::InvalidConfig("angles must lie in (0, 45) degrees"));
        }
        if !(self.beta_min > 0.0) {
            return Err(PerimeterError::InvalidConfig("beta_min must be positive"));
        }
        if !(self.ransac.inlier_tol > 0.0) || self.ransac.iterations == 0 {
            return Err(PerimeterError::InvalidConfig("RANSAC needs a positive tolerance and iterations"));
        }
        if !(self.max_corner_reach > 0.0 && self.collinear_tol >= 0.0) {
            return Err(PerimeterError::InvalidConfig("corner reach must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallSegment {
    pub segment: Segment2,
    pub line: Line2,
    pub source_wall: u32,
    pub inlier_count: usize,
}

impl WallSegment {
    pub fn from_segment(segment: Segment2, source_wall: u32, inlier_count: usize) -> Self {
        Self { segment, line: segment.line(), source_wall, inlier_count }
    }
}

/// One segment per wall point set; sets that cannot be fitted are skipped.
pub fn fit_wall_segments(walls: &[(u32, Vec<Vec2>)], cfg: &PerimeterConfig) -> Vec<WallSegment> {
    let r = &cfg.ransac;
    walls
        .iter()
        .filter_map(|(id, pts)| {
            let fitted = fit_line_ransac(pts, r.inlier_tol, r.iterations, r.rng_seed).and_then(|(line, inl)| {
                let inliers: Vec<Vec2> = inl.iter().map(|&i| pts[i]).collect();
                let seg = project_segment(&line, &inliers)?;
                Ok(WallSegment { segment: seg, line, source_wall: *id, inlier_count: inl.len() })
            });
            match fitted {
                Ok(s) => Some(s),
                Err(e) => {
                    log::debug!("wall {id}: skipped ({e})");
                    None
                }
            }
        })
        .collect()
}

/// True when `b` duplicates `a`: nearly the same line and overlapping extents.
fn duplicates(a: &WallSegment, b: &WallSegment, cfg: &PerimeterConfig) -> bool {
    if a.line.angle_to(&b.line) > cfg.theta_min.to_radians() + 1e-12 {
        return false;
    }
    let sign = a.line.normal.dot(b.line.normal).signum();
    if (a.line.offset - sign * b.line.offset).abs() > cfg.beta_min + 1e-12 {
        return false;
    }
    let d = a.segment.direction();
    let span = |s: &Segment2| {
        let (p, q) = (d.dot(s.a), d.dot(s.b));
        (p.min(q), p.max(q))
    };
    let (a0, a1) = span(&a.segment);
    let (b0, b1) = span(&b.segment);
    a1.min(b1) - a0.max(b0) > 0.0
}

/// Removes duplicate segments, keeping those with more inliers. Output keeps
/// the input order of the survivors.
pub fn dedup_segments(segments: &[WallSegment], cfg: &PerimeterConfig) -> Vec<WallSegment> {
    let mut by_strength: Vec<usize> = (0..segments.len()).collect();
    by_strength.sort_by(|&i, &j| segments[j].inlier_count.cmp(&segments[i].inlier_count).then(i.cmp(&j)));
    let mut kept: Vec<usize> = Vec::new();
    for i in by_strength {
        if !kept.iter().any(|&k| duplicates(&segments[k], &segments[i], cfg)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|i| segments[i]).collect()
}

/// Rotates segments within `theta_orth` of an axis about their midpoints so
/// they become exactly axis-parallel.
pub fn snap_to_axes(segments: &[WallSegment], cfg: &PerimeterConfig) -> Vec<WallSegment> {
    let limit = cfg.theta_orth.to_radians() + 1e-12;
    segments
        .iter()
        .map(|s| {
            let g = s.segment;
            let d = g.b - g.a;
            let len = d.norm();
            let mid = g.midpoint();
            let half = len / 2.0;
            let to_x = (d.y.abs()).atan2(d.x.abs());
            let (a, b) = if to_x <= limit {
                let sx = d.x.signum();
                (Vec2::new(mid.x - sx * half, mid.y), Vec2::new(mid.x + sx * half, mid.y))
            } else if std::f64::consts::FRAC_PI_2 - to_x <= limit {
                let sy = d.y.signum();
                (Vec2::new(mid.x, mid.y - sy * half), Vec2::new(mid.x, mid.y + sy * half))
            } else {
                return *s;
            };
            match Segment2::new(a, b) {
                Ok(seg) => WallSegment { segment: seg, line: seg.line(), ..*s },
                Err(_) => *s,
            }
        })
        .collect()
}

/// Intermediate results of one room's perimeter estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerimeterDetail {
    /// Segments after dedup and snapping, in tour node numbering.
    pub segments: Vec<WallSegment>,
    pub tour: Option<TourTrace>,
    pub polygon: Result<SimplePolygon, PerimeterError>,
}

pub fn estimate_room_perimeter_detailed(walls: &[(u32, Vec<Vec2>)], cfg: &PerimeterConfig) -> PerimeterDetail {
    if let Err(e) = cfg.validate() {
        return PerimeterDetail { segments: Vec::new(), tour: None, polygon: Err(e) };
    }
    let fitted = fit_wall_segments(walls, cfg);
    let segments = snap_to_axes(&dedup_segments(&fitted, cfg), cfg);
    match order_segments_traced(&segments) {
        Ok(tour) => {
            let polygon = extrude_polygon(&tour.path, &segments, cfg);
            PerimeterDetail { segments, tour: Some(tour), polygon }
        }
        Err(e) => PerimeterDetail { segments, tour: None, polygon: Err(e) },
    }
}

/// Fit, dedup, snap, order and extrude one room's walls.
pub fn estimate_room_perimeter(walls: &[(u32, Vec<Vec2>)], cfg: &PerimeterConfig) -> Result<SimplePolygon, PerimeterError> {
    estimate_room_perimeter_detailed(walls, cfg).polygon
}
