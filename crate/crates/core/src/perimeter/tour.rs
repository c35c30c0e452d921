//! Ordering wall segments into a closed perimeter with a 2-opt variant in
//! which each segment contributes both endpoints as nodes and the edge
//! between a segment's own endpoints costs nothing.

use super::{PerimeterError, WallSegment};
use crate::geom::Vec2;

/// Strict improvement needed to accept a move.
const IMPROVE_EPS: f64 = 1e-12;

/// Cyclic node order. Node `2s` is the first endpoint of segment `s`,
/// node `2s + 1` the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerimeterPath {
    pub order: Vec<usize>,
    pub pair_adjacent: bool,
}

impl PerimeterPath {
    /// Segments in tour order as `(segment, reversed)`, where `reversed`
    /// means the tour enters at the second endpoint. `None` unless every
    /// endpoint pair is adjacent.
    pub fn segment_sequence(&self) -> Option<Vec<(usize, bool)>> {
        if !pairs_adjacent(&self.order) {
            return None;
        }
        let n = self.order.len();
        let start = (0..n).find(|&i| partner(self.order[i]) == self.order[(i + 1) % n])?;
        Some(
            (0..n / 2)
                .map(|k| {
                    let v = self.order[(start + 2 * k) % n];
                    (v / 2, v % 2 == 1)
                })
                .collect(),
        )
    }
}

fn partner(v: usize) -> usize {
    v ^ 1
}

fn pairs_adjacent(order: &[usize]) -> bool {
    let n = order.len();
    let mut pos = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    (0..n).step_by(2).all(|v| {
        let d = pos[v].abs_diff(pos[v + 1]);
        d == 1 || d == n - 1
    })
}

fn endpoint(segments: &[WallSegment], v: usize) -> Vec2 {
    let s = &segments[v / 2].segment;
    if v.is_multiple_of(2) {
        s.a
    } else {
        s.b
    }
}

/// Edge cost: zero between a segment's own endpoints, Euclidean otherwise.
pub fn node_cost(segments: &[WallSegment], u: usize, v: usize) -> f64 {
    if u / 2 == v / 2 {
        0.0
    } else {
        endpoint(segments, u).dist(endpoint(segments, v))
    }
}

/// Total cost of a cyclic node order.
pub fn tour_cost(segments: &[WallSegment], order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| node_cost(segments, order[i], order[(i + 1) % n])).sum()
}

/// Cost of a pair-adjacent tour given as a segment sequence.
pub fn sequence_cost(segments: &[WallSegment], seq: &[(usize, bool)]) -> f64 {
    tour_cost(segments, &sequence_to_order(seq))
}

fn sequence_to_order(seq: &[(usize, bool)]) -> Vec<usize> {
    seq.iter()
        .flat_map(|&(s, rev)| if rev { [2 * s + 1, 2 * s] } else { [2 * s, 2 * s + 1] })
        .collect()
}

/// Segments sorted by the angle of their midpoints about the midpoints'
/// centroid, each oriented to run counter-clockwise.
fn initial_sequence(segments: &[WallSegment]) -> Vec<(usize, bool)> {
    let n = segments.len() as f64;
    let c = segments.iter().fold(Vec2::default(), |acc, s| acc + s.segment.midpoint()) / n;
    let angle = |p: Vec2| (p.y - c.y).atan2(p.x - c.x);
    let mut idx: Vec<usize> = (0..segments.len()).collect();
    idx.sort_by(|&i, &j| angle(segments[i].segment.midpoint()).total_cmp(&angle(segments[j].segment.midpoint())));
    idx.into_iter()
        .map(|s| {
            let seg = &segments[s].segment;
            // Counter-clockwise about c means the cross product of the
            // radius and direction is positive.
            let forward = (seg.midpoint() - c).cross(seg.b - seg.a) >= 0.0;
            (s, !forward)
        })
        .collect()
}

/// Plain node-level 2-opt with first-improvement moves. Records the tour
/// cost after every accepted move.
fn two_opt_nodes(segments: &[WallSegment], order: &mut [usize], history: &mut Vec<f64>) {
    let n = order.len();
    if n < 4 {
        return;
    }
    let d = |u: usize, v: usize| node_cost(segments, u, v);
    'outer: loop {
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b, c, e) = (order[i], order[i + 1], order[j], order[(j + 1) % n]);
                let delta = d(a, c) + d(b, e) - d(a, b) - d(c, e);
                if delta < -IMPROVE_EPS {
                    order[i + 1..=j].reverse();
                    history.push(tour_cost(segments, order));
                    continue 'outer;
                }
            }
        }
        break;
    }
}

/// Rebuilds a pair-adjacent tour by walking the cycle and emitting each
/// segment at its first-seen endpoint.
fn repair(order: &[usize]) -> Vec<(usize, bool)> {
    let n = order.len();
    let mut placed = vec![false; n / 2];
    let mut seq = Vec::with_capacity(n / 2);
    for &v in order {
        if !placed[v / 2] {
            placed[v / 2] = true;
            seq.push((v / 2, v % 2 == 1));
        }
    }
    seq
}

fn entry(seq: &[(usize, bool)], i: usize) -> usize {
    let (s, rev) = seq[i];
    2 * s + rev as usize
}

fn exit(seq: &[(usize, bool)], i: usize) -> usize {
    partner(entry(seq, i))
}

/// Local search over pair-adjacent tours: segment-block reversal (2-opt
/// restricted to inter-segment edges) and single-segment relocation.
fn polish(segments: &[WallSegment], seq: &mut Vec<(usize, bool)>, history: &mut Vec<f64>) {
    let k = seq.len();
    if k < 2 {
        return;
    }
    let d = |u: usize, v: usize| node_cost(segments, u, v);
    'outer: loop {
        // Block reversal between gap edges (i-1 -> i) and (j -> j+1).
        for i in 0..k {
            for j in i..k {
                if i == 0 && j == k - 1 {
                    continue;
                }
                let p = (i + k - 1) % k;
                let q = (j + 1) % k;
                let before = d(exit(seq, p), entry(seq, i)) + d(exit(seq, j), entry(seq, q));
                let after = d(exit(seq, p), exit(seq, j)) + d(entry(seq, i), entry(seq, q));
                if after - before < -IMPROVE_EPS {
                    seq[i..=j].reverse();
                    for s in &mut seq[i..=j] {
                        s.1 = !s.1;
                    }
                    history.push(sequence_cost(segments, seq));
                    continue 'outer;
                }
            }
        }
        // Relocation of one segment, in either orientation.
        let base = sequence_cost(segments, seq);
        for i in 0..k {
            let mut rest = seq.clone();
            let item = rest.remove(i);
            for pos in 0..rest.len() {
                for flip in [false, true] {
                    let mut cand = rest.clone();
                    cand.insert(pos + 1, (item.0, item.1 ^ flip));
                    let c = sequence_cost(segments, &cand);
                    if c < base - IMPROVE_EPS {
                        *seq = cand;
                        history.push(c);
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
}

/// Outcome of tour construction with per-move cost traces.
#[derive(Debug, Clone, PartialEq)]
pub struct TourTrace {
    pub path: PerimeterPath,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Costs after each accepted node-level 2-opt move.
    pub two_opt_history: Vec<f64>,
    /// Costs after each accepted pair-preserving move.
    pub polish_history: Vec<f64>,
}

/// Orders segments into a closed, pair-adjacent tour.
pub fn order_segments_2opt(segments: &[WallSegment]) -> Result<PerimeterPath, PerimeterError> {
    Ok(order_segments_traced(segments)?.path)
}

pub fn order_segments_traced(segments: &[WallSegment]) -> Result<TourTrace, PerimeterError> {
    if segments.len() < 2 {
        return Err(PerimeterError::TooFewSegments(segments.len()));
    }
    let initial = initial_sequence(segments);
    let initial_cost = sequence_cost(segments, &initial);

    let mut two_opt_history = Vec::new();
    let mut order = sequence_to_order(&initial);
    two_opt_nodes(segments, &mut order, &mut two_opt_history);
    let mut seq = PerimeterPath { order: order.clone(), pair_adjacent: pairs_adjacent(&order) }
        .segment_sequence()
        .unwrap_or_else(|| repair(&order));

    let mut polish_history = Vec::new();
    polish(segments, &mut seq, &mut polish_history);

    // Repair can cost more than it saves; never end above the starting tour.
    if sequence_cost(segments, &seq) > initial_cost + IMPROVE_EPS {
        let mut alt = initial.clone();
        let mut alt_history = Vec::new();
        polish(segments, &mut alt, &mut alt_history);
        if sequence_cost(segments, &alt) < sequence_cost(segments, &seq) {
            seq = alt;
            polish_history = alt_history;
        }
    }

    let order = sequence_to_order(&seq);
    let final_cost = tour_cost(segments, &order);
    Ok(TourTrace {
        path: PerimeterPath { order, pair_adjacent: true },
        initial_cost,
        final_cost,
        two_opt_history,
        polish_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Segment2;

    fn seg(a: (f64, f64), b: (f64, f64)) -> WallSegment {
        WallSegment::from_segment(Segment2::new(Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)).unwrap(), 0, 10)
    }

    #[test]
    fn square_sides_are_toured_in_order() {
        let segs = vec![
            seg((0., 0.), (1., 0.)),
            seg((0., 1.), (1., 1.)),
            seg((1., 0.), (1., 1.)),
            seg((0., 0.), (0., 1.)),
        ];
        let t = order_segments_traced(&segs).unwrap();
        assert!(t.path.pair_adjacent);
        assert!(t.final_cost.abs() < 1e-12);
        assert_eq!(t.path.segment_sequence().unwrap().len(), 4);
    }

    #[test]
    fn two_parallel_segments() {
        let segs = vec![seg((0., 0.), (1., 0.)), seg((0., 1.), (1., 1.))];
        let p = order_segments_2opt(&segs).unwrap();
        assert!(p.pair_adjacent);
        assert_eq!(p.order.len(), 4);
        assert!((tour_cost(&segs, &p.order) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn too_few() {
        assert!(matches!(
            order_segments_2opt(&[seg((0., 0.), (1., 0.))]),
            Err(PerimeterError::TooFewSegments(1))
        ));
    }

    #[test]
    fn repair_keeps_pairs_together() {
        let seq = repair(&[0, 2, 1, 3, 4, 5]);
        assert_eq!(seq, vec![(0, false), (1, false), (2, false)]);
    }
}
