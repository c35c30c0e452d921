//! 2D/3D geometry shared by every stage of the pipeline: vectors, lines,
//! segments, simple polygons, rasterization and robust line fitting.

mod frame;
mod outline;
mod raster;
mod ransac;

use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frame::{NormalizeFrame, NORMALIZED_EXTENT};
pub use outline::{trace_outline, CellGrid};
pub use raster::{mask_iou, rasterize, GridTransform, RasterMask};
pub use ransac::{fit_line_ransac, project_segment};

/// Minimum segment length and projection span, in scene units.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-6;
/// Lines whose normals have |sin(angle)| below this are treated as parallel.
pub const PARALLEL_SINE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("need at least two points, got {0}")]
    FewerThanTwoPoints(usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("polygon needs at least 3 corners, got {0}")]
    TooFewCorners(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("polygon falls outside the raster grid")]
    OutOfBounds,
    #[error("raster masks have different dimensions or transforms")]
    DimMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Vec2 {
        self / self.norm()
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Vec2, t: f64) -> Vec2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn dist2(self, o: Vec3) -> f64 {
        let d = self - o;
        d.dot(d)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

macro_rules! impl_vec_ops {
    ($t:ident, $($f:ident),+) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { $t { $($f: self.$f + o.$f),+ } }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { $t { $($f: self.$f - o.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t { $t { $($f: self.$f * s),+ } }
        }
        impl Div<f64> for $t {
            type Output = $t;
            fn div(self, s: f64) -> $t { $t { $($f: self.$f / s),+ } }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { $t { $($f: -self.$f),+ } }
        }
    };
}

impl_vec_ops!(Vec2, x, y);
impl_vec_ops!(Vec3, x, y, z);

/// Mean of a non-empty set of points.
pub fn centroid3<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Vec3> {
    let mut sum = Vec3::default();
    let mut n = 0usize;
    for p in points {
        sum = sum + *p;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Infinite line `normal · p = offset` with a unit normal.
///
/// Normals are kept in a canonical half-plane (`y > 0`, or `y == 0` and
/// `x > 0`) so that equal lines compare equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2 {
    pub normal: Vec2,
    pub offset: f64,
}

impl Line2 {
    pub fn new(normal: Vec2, offset: f64) -> Result<Self, GeomError> {
        let len = normal.norm();
        if !len.is_finite() || !offset.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if len < 1e-15 {
            return Err(GeomError::DegenerateInput("zero normal"));
        }
        Ok(Self::canonical(normal / len, offset / len))
    }

    pub fn through(a: Vec2, b: Vec2) -> Result<Self, GeomError> {
        let d = b - a;
        if d.norm() < MIN_SEGMENT_LENGTH {
            return Err(GeomError::DegenerateInput("coincident points"));
        }
        let n = d.perp().normalized();
        Ok(Self::canonical(n, n.dot(a)))
    }

    /// Line through `p` with the given direction.
    pub fn from_point_dir(p: Vec2, dir: Vec2) -> Result<Self, GeomError> {
        Self::through(p, p + dir.normalized())
    }

    fn canonical(normal: Vec2, offset: f64) -> Self {
        if normal.y < -1e-12 || (normal.y.abs() <= 1e-12 && normal.x < 0.0) {
            Self { normal: -normal, offset: -offset }
        } else {
            Self { normal, offset }
        }
    }

    /// Unit direction; `normal` rotated clockwise.
    pub fn direction(&self) -> Vec2 {
        Vec2::new(self.normal.y, -self.normal.x)
    }

    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn distance(&self, p: Vec2) -> f64 {
        self.signed_distance(p).abs()
    }

    pub fn project(&self, p: Vec2) -> Vec2 {
        p - self.normal * self.signed_distance(p)
    }

    /// Angle between the two undirected lines, in radians within `[0, π/2]`.
    pub fn angle_to(&self, other: &Line2) -> f64 {
        let c = self.normal.dot(other.normal).abs().min(1.0);
        c.acos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Intersection {
    Point(Vec2),
    Parallel,
}

pub fn line_intersection(l1: &Line2, l2: &Line2) -> Intersection {
    let det = l1.normal.cross(l2.normal);
    if det.abs() < PARALLEL_SINE {
        return Intersection::Parallel;
    }
    let x = (l1.offset * l2.normal.y - l2.offset * l1.normal.y) / det;
    let y = (l1.normal.x * l2.offset - l2.normal.x * l1.offset) / det;
    Intersection::Point(Vec2::new(x, y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Vec2,
    pub b: Vec2,
}

impl Segment2 {
    pub fn new(a: Vec2, b: Vec2) -> Result<Self, GeomError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if a.dist(b) < MIN_SEGMENT_LENGTH {
            return Err(GeomError::DegenerateInput("segment shorter than 1e-6"));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.a + self.b) * 0.5
    }

    pub fn direction(&self) -> Vec2 {
        (self.b - self.a).normalized()
    }

    pub fn line(&self) -> Line2 {
        Line2::through(self.a, self.b).expect("segment endpoints are distinct")
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2, eps: f64) -> bool {
    p.x >= a.x.min(b.x) - eps
        && p.x <= a.x.max(b.x) + eps
        && p.y >= a.y.min(b.y) - eps
        && p.y <= a.y.max(b.y) + eps
}

/// Closed-segment intersection test, touching counts.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let scale = [p1, p2, q1, q2]
        .iter()
        .map(|v| v.x.abs().max(v.y.abs()))
        .fold(1.0, f64::max);
    let eps = 1e-12 * scale * scale;
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    let tol = 1e-12 * scale;
    (d1.abs() <= eps && on_segment(q1, q2, p1, tol))
        || (d2.abs() <= eps && on_segment(q1, q2, p2, tol))
        || (d3.abs() <= eps && on_segment(p1, p2, q1, tol))
        || (d4.abs() <= eps && on_segment(p1, p2, q2, tol))
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(corners: &[Vec2]) -> f64 {
    let n = corners.len();
    (0..n)
        .map(|i| corners[i].cross(corners[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// A simple polygon with counter-clockwise corners.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "Vec<Vec2>")]
pub struct SimplePolygon {
    corners: Vec<Vec2>,
}

impl SimplePolygon {
    /// Validates and stores `corners`, reversing clockwise input.
    pub fn new(mut corners: Vec<Vec2>) -> Result<Self, GeomError> {
        if corners.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if corners.len() < 3 {
            return Err(GeomError::TooFewCorners(corners.len()));
        }
        let n = corners.len();
        if (0..n).any(|i| corners[i] == corners[(i + 1) % n]) {
            return Err(GeomError::DegenerateInput("repeated consecutive corner"));
        }
        let area = signed_area(&corners);
        let scale = corners
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1e-300, f64::max);
        if area.abs() <= 1e-14 * scale * scale {
            return Err(GeomError::ZeroArea);
        }
        if area < 0.0 {
            corners.reverse();
        }
        if self_intersects(&corners) {
            return Err(GeomError::SelfIntersecting);
        }
        Ok(Self { corners })
    }

    pub fn corners(&self) -> &[Vec2] {
        &self.corners
    }

    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.corners.len();
        (0..n).map(move |i| (self.corners[i], self.corners[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        bounds_of(self.corners.iter().copied()).expect("polygon is non-empty")
    }

    /// Applies `f` to each corner and re-validates.
    pub fn map(&self, f: impl Fn(Vec2) -> Vec2) -> Result<Self, GeomError> {
        Self::new(self.corners.iter().map(|&c| f(c)).collect())
    }
}

impl From<SimplePolygon> for Vec<Vec2> {
    fn from(p: SimplePolygon) -> Self {
        p.corners
    }
}

impl<'de> Deserialize<'de> for SimplePolygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let corners = Vec::<Vec2>::deserialize(d)?;
        SimplePolygon::new(corners).map_err(serde::de::Error::custom)
    }
}

pub fn bounds_of(points: impl IntoIterator<Item = Vec2>) -> Option<(Vec2, Vec2)> {
    let mut it = points.into_iter();
    let first = it.next()?;
    Some(it.fold((first, first), |(lo, hi), p| {
        (
            Vec2::new(lo.x.min(p.x), lo.y.min(p.y)),
            Vec2::new(hi.x.max(p.x), hi.y.max(p.y)),
        )
    }))
}

fn self_intersects(c: &[Vec2]) -> bool {
    let n = c.len();
    for i in 0..n {
        let (a1, a2) = (c[i], c[(i + 1) % n]);
        // Adjacent edges may only share their common corner: reject fold-backs.
        let a3 = c[(i + 2) % n];
        let u = a2 - a1;
        let v = a3 - a2;
        if u.cross(v).abs() <= 1e-12 * u.norm() * v.norm() && u.dot(v) < 0.0 {
            return true;
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a1, a2, c[j], c[(j + 1) % n]) {
                return true;
            }
        }
    }
    false
}

pub fn polygon_area(p: &SimplePolygon) -> f64 {
    signed_area(&p.corners)
}

/// Even-odd containment test.
pub fn point_in_polygon(p: Vec2, corners: &[Vec2]) -> bool {
    let n = corners.len();
    let mut inside = false;
    for i in 0..n {
        let a = corners[i];
        let b = corners[(i + 1) % n];
        if (a.y <= p.y) != (b.y <= p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Drops corners whose neighbours make them redundant (collinear within `tol`
/// perpendicular distance) and merges consecutive corners closer than `tol`.
pub fn remove_collinear(corners: &[Vec2], tol: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = corners.to_vec();
    loop {
        let n = out.len();
        if n < 3 {
            return out;
        }
        let mut removed = false;
        for i in 0..n {
            let prev = out[(i + n - 1) % n];
            let cur = out[i];
            let next = out[(i + 1) % n];
            let chord = next - prev;
            let dev = if chord.norm() < 1e-15 {
                cur.dist(prev)
            } else {
                (cur - prev).cross(chord).abs() / chord.norm()
            };
            let between = (cur - prev).dot(chord) >= -tol && (next - cur).dot(chord) >= -tol;
            if cur.dist(prev) <= tol || (dev <= tol && between) {
                out.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[(f64, f64)]) -> SimplePolygon {
        SimplePolygon::new(c.iter().map(|&(x, y)| Vec2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn areas() {
        assert_eq!(polygon_area(&poly(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)])), 1.0);
        assert_eq!(polygon_area(&poly(&[(0., 0.), (2., 0.), (0., 2.)])), 2.0);
        let l = poly(&[(0., 0.), (2., 0.), (2., 1.), (1., 1.), (1., 2.), (0., 2.)]);
        assert_eq!(polygon_area(&l), 3.0);
    }

    #[test]
    fn clockwise_input_is_reversed() {
        let p = poly(&[(0., 0.), (0., 1.), (1., 1.), (1., 0.)]);
        assert!(signed_area(p.corners()) > 0.0);
    }

    #[test]
    fn rejects_bowtie_and_spike() {
        let bowtie = [(0., 0.), (2., 2.), (2., 0.), (0., 1.)];
        let r = SimplePolygon::new(bowtie.iter().map(|&(x, y)| Vec2::new(x, y)).collect());
        assert_eq!(r, Err(GeomError::SelfIntersecting));
        let spike = [(0., 0.), (2., 0.), (1., 0.), (1., 1.)];
        let r = SimplePolygon::new(spike.iter().map(|&(x, y)| Vec2::new(x, y)).collect());
        assert!(r.is_err());
        assert_eq!(
            SimplePolygon::new(vec![Vec2::new(0., 0.), Vec2::new(1., 0.)]),
            Err(GeomError::TooFewCorners(2))
        );
    }

    #[test]
    fn rejects_touching_non_adjacent_edges() {
        // Two squares sharing a single vertex, traced as one ring.
        let c = [(0., 0.), (1., 0.), (1., 1.), (2., 1.), (2., 2.), (1., 2.), (1., 1.), (0., 1.)];
        let r = SimplePolygon::new(c.iter().map(|&(x, y)| Vec2::new(x, y)).collect());
        assert!(r.is_err());
    }

    #[test]
    fn intersections() {
        let x0 = Line2::new(Vec2::new(1., 0.), 0.).unwrap();
        let y0 = Line2::new(Vec2::new(0., 1.), 0.).unwrap();
        assert_eq!(line_intersection(&x0, &y0), Intersection::Point(Vec2::new(0., 0.)));
        let y1 = Line2::new(Vec2::new(0., 1.), 1.).unwrap();
        let y2 = Line2::new(Vec2::new(0., 1.), 2.).unwrap();
        assert_eq!(line_intersection(&y1, &y2), Intersection::Parallel);
        let a = Line2::through(Vec2::new(0., 0.), Vec2::new(1., 1.)).unwrap();
        let b = Line2::through(Vec2::new(0., 2.), Vec2::new(2., 0.)).unwrap();
        match line_intersection(&a, &b) {
            Intersection::Point(p) => assert!(p.dist(Vec2::new(1., 1.)) < 1e-12),
            Intersection::Parallel => panic!("expected a point"),
        }
    }

    #[test]
    fn canonical_normal() {
        let l = Line2::new(Vec2::new(0., -2.), -2.).unwrap();
        assert_eq!(l.normal, Vec2::new(0., 1.));
        assert_eq!(l.offset, 1.0);
    }

    #[test]
    fn collinear_cleanup() {
        let c: Vec<Vec2> = [(0., 0.), (1., 0.), (2., 0.), (2., 2.), (0., 2.)]
            .iter()
            .map(|&(x, y)| Vec2::new(x, y))
            .collect();
        assert_eq!(remove_collinear(&c, 1e-9).len(), 4);
    }

    #[test]
    fn containment() {
        let sq = [Vec2::new(0., 0.), Vec2::new(1., 0.), Vec2::new(1., 1.), Vec2::new(0., 1.)];
        assert!(point_in_polygon(Vec2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Vec2::new(1.5, 0.5), &sq));
    }
}
