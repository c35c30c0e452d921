//! Corner recovery from an ordered, pair-adjacent segment tour.

use super::{PerimeterConfig, PerimeterError, PerimeterPath, WallSegment};
use crate::geom::{line_intersection, remove_collinear, GeomError, Intersection, SimplePolygon, Vec2};

/// Consecutive corners closer than this are merged.
const MERGE_TOL: f64 = 1e-4;

/// How a pair of consecutive segments was joined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Join {
    /// Supporting lines intersect at a plausible corner.
    Corner(Vec2),
    /// Parallel or implausibly distant intersection: bridge at the midpoint
    /// of the facing endpoints.
    Midpoint(Vec2),
    /// Parallel, offset lines whose gap is mostly across the walls, as when
    /// the connecting wall is missing: a perpendicular step.
    Step(Vec2, Vec2),
    /// Continuation of the same line: no corner.
    Collinear,
}

/// Decides the corner(s) between segment `s` (leaving at `exit`) and
/// segment `t` (entered at `entry`).
pub fn join(s: &WallSegment, exit: Vec2, t: &WallSegment, entry: Vec2, cfg: &PerimeterConfig) -> Join {
    let gap = exit.dist(entry);
    let mid = exit.lerp(entry, 0.5);
    let near_parallel = s.line.angle_to(&t.line) <= cfg.parallel_corner_angle.to_radians();
    if near_parallel {
        let dir = s.line.direction();
        let delta = entry - exit;
        let along = delta.dot(dir).abs();
        let across = delta.cross(dir).abs();
        let offset = s.line.distance(entry).max(t.line.distance(exit));
        if offset <= cfg.collinear_tol {
            return Join::Collinear;
        }
        if across >= along {
            return Join::Step(s.line.project(mid), t.line.project(mid));
        }
        return Join::Midpoint(mid);
    }
    match line_intersection(&s.line, &t.line) {
        Intersection::Point(p) => {
            let bound = (2.0 * gap).max(cfg.max_corner_reach);
            if p.dist(exit) > bound && p.dist(entry) > bound {
                Join::Midpoint(mid)
            } else {
                Join::Corner(p)
            }
        }
        Intersection::Parallel => Join::Midpoint(mid),
    }
}

/// All joins of a tour, in order; join `i` follows the `i`-th segment.
pub fn tour_joins(path: &PerimeterPath, segments: &[WallSegment], cfg: &PerimeterConfig) -> Result<Vec<Join>, PerimeterError> {
    let seq = path.segment_sequence().ok_or(PerimeterError::NotPairAdjacent)?;
    let k = seq.len();
    let ends = |(s, rev): (usize, bool)| {
        let g = &segments[s].segment;
        if rev {
            (g.b, g.a)
        } else {
            (g.a, g.b)
        }
    };
    Ok((0..k)
        .map(|i| {
            let (s, t) = (seq[i], seq[(i + 1) % k]);
            let (_, exit) = ends(s);
            let (entry, _) = ends(t);
            join(&segments[s.0], exit, &segments[t.0], entry, cfg)
        })
        .collect())
}

/// Extrudes a closed polygon from the tour. Fails when the corners do not
/// form a simple polygon.
pub fn extrude_polygon(
    path: &PerimeterPath,
    segments: &[WallSegment],
    cfg: &PerimeterConfig,
) -> Result<SimplePolygon, PerimeterError> {
    let mut corners = Vec::new();
    for j in tour_joins(path, segments, cfg)? {
        match j {
            Join::Corner(p) | Join::Midpoint(p) => corners.push(p),
            Join::Step(p, q) => corners.extend([p, q]),
            Join::Collinear => {}
        }
    }
    let mut merged: Vec<Vec2> = Vec::with_capacity(corners.len());
    for c in corners {
        if merged.last().is_none_or(|l: &Vec2| l.dist(c) > MERGE_TOL) {
            merged.push(c);
        }
    }
    while merged.len() > 1 && merged[0].dist(*merged.last().unwrap()) <= MERGE_TOL {
        merged.pop();
    }
    let cleaned = remove_collinear(&merged, MERGE_TOL);
    SimplePolygon::new(cleaned).map_err(|e| match e {
        GeomError::SelfIntersecting => PerimeterError::SelfIntersecting,
        other => PerimeterError::Degenerate(other),
    })
}
