//! Density clustering of votes, back-propagation of cluster labels to
//! seeds, removal of weak clusters and room/wall set intersection.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("invalid DBSCAN parameters: {0}")]
    InvalidParams(&'static str),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    pub const ROOM: DbscanParams = DbscanParams { eps: 0.05, min_pts: 8 };
    pub const WALL: DbscanParams = DbscanParams { eps: 0.025, min_pts: 8 };

    pub fn validate(&self) -> Result<(), ClusterError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(ClusterError::InvalidParams("eps must be positive and finite"));
        }
        if self.min_pts < 1 {
            return Err(ClusterError::InvalidParams("min_pts must be at least 1"));
        }
        Ok(())
    }
}

/// Per-point cluster label; `None` is noise. Labels are `0..n_clusters`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterAssignment {
    pub labels: Vec<Option<u32>>,
    pub n_clusters: usize,
}

type Cell = (i64, i64, i64);

fn cell_of(p: Vec3, eps: f64) -> Cell {
    ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64, (p.z / eps).floor() as i64)
}

/// Neighbour lists (inclusive radius, including the point itself) via a
/// uniform hash grid with cell size `eps`.
fn neighbourhoods(points: &[Vec3], eps: f64) -> Vec<Vec<usize>> {
    let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        grid.entry(cell_of(p, eps)).or_default().push(i);
    }
    let eps2 = eps * eps;
    points
        .par_iter()
        .map(|&p| {
            let (cx, cy, cz) = cell_of(p, eps);
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                            out.extend(bucket.iter().copied().filter(|&j| points[j].dist2(p) <= eps2));
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

/// DBSCAN. Clusters are numbered in input order of their first core point;
/// a border point joins the lowest-numbered cluster among its core
/// neighbours.
pub fn dbscan(points: &[Vec3], params: &DbscanParams) -> Result<ClusterAssignment, ClusterError> {
    params.validate()?;
    let nbrs = neighbourhoods(points, params.eps);
    let core: Vec<bool> = nbrs.iter().map(|n| n.len() >= params.min_pts).collect();

    let mut labels: Vec<Option<u32>> = vec![None; points.len()];
    let mut next = 0u32;
    for start in 0..points.len() {
        if !core[start] || labels[start].is_some() {
            continue;
        }
        labels[start] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &j in &nbrs[i] {
                if core[j] && labels[j].is_none() {
                    labels[j] = Some(next);
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    for i in 0..points.len() {
        if !core[i] {
            labels[i] = nbrs[i].iter().filter(|&&j| core[j]).filter_map(|&j| labels[j]).min();
        }
    }
    Ok(ClusterAssignment { labels, n_clusters: next as usize })
}

/// Cluster memberships per seed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeedLabels {
    /// Sorted, de-duplicated room clusters each seed belongs to (0, 1 or 2).
    pub rooms: Vec<Vec<u32>>,
    pub walls: Vec<Option<u32>>,
    pub n_rooms: usize,
    pub n_walls: usize,
}

/// Maps vote clusters back to seeds. `room_assign` covers the concatenated
/// `room_vote_0 ++ room_vote_1` (length `2m`), `wall_assign` the wall votes.
pub fn backtrack_labels(
    m: usize,
    room_assign: &ClusterAssignment,
    wall_assign: &ClusterAssignment,
) -> Result<SeedLabels, ClusterError> {
    if room_assign.labels.len() != 2 * m {
        return Err(ClusterError::LengthMismatch(format!(
            "room assignment covers {} votes, expected {}",
            room_assign.labels.len(),
            2 * m
        )));
    }
    if wall_assign.labels.len() != m {
        return Err(ClusterError::LengthMismatch(format!(
            "wall assignment covers {} votes, expected {m}",
            wall_assign.labels.len()
        )));
    }
    let rooms = (0..m)
        .map(|i| {
            let mut r: Vec<u32> = [room_assign.labels[i], room_assign.labels[m + i]].into_iter().flatten().collect();
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    Ok(SeedLabels {
        rooms,
        walls: wall_assign.labels.clone(),
        n_rooms: room_assign.n_clusters,
        n_walls: wall_assign.n_clusters,
    })
}

/// Drops clusters with fewer than `threshold` distinct member seeds and
/// renumbers survivors densely, keeping their relative order. Returns the
/// old-to-new map.
fn surviving(counts: &[usize], threshold: f64) -> (Vec<Option<u32>>, usize) {
    let mut next = 0u32;
    let map = counts
        .iter()
        .map(|&c| {
            ((c as f64) >= threshold).then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    (map, next as usize)
}

pub const ROOM_PRUNE_FRACTION: f64 = 0.05;
pub const WALL_PRUNE_FRACTION: f64 = 0.01;

/// Removes room clusters with fewer than `room_frac * m` member seeds and
/// wall clusters with fewer than `wall_frac * m`, compacting labels.
pub fn prune_spurious(labels: &SeedLabels, m: usize, room_frac: f64, wall_frac: f64) -> SeedLabels {
    let mut room_counts = vec![0usize; labels.n_rooms];
    for r in labels.rooms.iter().flatten() {
        room_counts[*r as usize] += 1;
    }
    let mut wall_counts = vec![0usize; labels.n_walls];
    for w in labels.walls.iter().flatten() {
        wall_counts[*w as usize] += 1;
    }
    let (room_map, n_rooms) = surviving(&room_counts, room_frac * m as f64);
    let (wall_map, n_walls) = surviving(&wall_counts, wall_frac * m as f64);
    SeedLabels {
        rooms: labels
            .rooms
            .iter()
            .map(|r| r.iter().filter_map(|&k| room_map[k as usize]).collect())
            .collect(),
        walls: labels.walls.iter().map(|w| w.and_then(|w| wall_map[w as usize])).collect(),
        n_rooms,
        n_walls,
    }
}

/// Seeds of each room and, per room, the non-empty intersections with each
/// wall cluster.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RoomWallSets {
    /// `rooms[k]`: sorted seed indices with membership in room `k`.
    pub rooms: Vec<Vec<usize>>,
    /// `walls_per_room[k]`: `(wall cluster id, seeds)` in increasing wall id.
    pub walls_per_room: Vec<Vec<(u32, Vec<usize>)>>,
}

pub fn intersect_rooms_walls(labels: &SeedLabels) -> RoomWallSets {
    let mut rooms = vec![Vec::new(); labels.n_rooms];
    let mut walls: Vec<BTreeMap<u32, Vec<usize>>> = vec![BTreeMap::new(); labels.n_rooms];
    for (i, memberships) in labels.rooms.iter().enumerate() {
        for &k in memberships {
            rooms[k as usize].push(i);
            if let Some(w) = labels.walls[i] {
                walls[k as usize].entry(w).or_default().push(i);
            }
        }
    }
    RoomWallSets {
        rooms,
        walls_per_room: walls.into_iter().map(|m| m.into_iter().collect()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(labels: &[Option<u32>]) -> ClusterAssignment {
        let n = labels.iter().flatten().map(|&l| l as usize + 1).max().unwrap_or(0);
        ClusterAssignment { labels: labels.to_vec(), n_clusters: n }
    }

    #[test]
    fn dense_ball_is_one_cluster() {
        let pts: Vec<Vec3> = (0..20).map(|i| Vec3::new(0.0005 * i as f64, 0.0, 0.0)).collect();
        let a = dbscan(&pts, &DbscanParams { eps: 0.05, min_pts: 4 }).unwrap();
        assert_eq!(a.n_clusters, 1);
        assert!(a.labels.iter().all(|&l| l == Some(0)));
    }

    #[test]
    fn sparse_points_are_noise() {
        let pts = vec![Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(2., 0., 0.)];
        let a = dbscan(&pts, &DbscanParams { eps: 0.05, min_pts: 4 }).unwrap();
        assert_eq!(a.n_clusters, 0);
        assert!(a.labels.iter().all(Option::is_none));
    }

    #[test]
    fn eps_is_inclusive_and_self_counts() {
        let pts = vec![Vec3::new(0., 0., 0.), Vec3::new(0.5, 0., 0.)];
        let a = dbscan(&pts, &DbscanParams { eps: 0.5, min_pts: 2 }).unwrap();
        assert_eq!(a.labels, vec![Some(0), Some(0)]);
        let b = dbscan(&pts[..1], &DbscanParams { eps: 0.5, min_pts: 1 }).unwrap();
        assert_eq!(b.labels, vec![Some(0)]);
    }

    #[test]
    fn border_point_joins_lowest_cluster() {
        // Two dense groups with one bridge point between them that reaches a
        // core point of each but is not itself core.
        let mut pts = vec![Vec3::new(-0.9, 0., 0.); 5];
        pts.push(Vec3::new(0., 0., 0.));
        pts.push(Vec3::new(2., 0., 0.));
        pts.extend(vec![Vec3::new(2.9, 0., 0.); 5]);
        pts.push(Vec3::new(1., 0., 0.));
        let a = dbscan(&pts, &DbscanParams { eps: 1.0, min_pts: 5 }).unwrap();
        assert_eq!(a.n_clusters, 2);
        assert_eq!(a.labels[12], Some(0));
    }

    #[test]
    fn invalid_params() {
        assert!(dbscan(&[], &DbscanParams { eps: 0.0, min_pts: 1 }).is_err());
        assert!(dbscan(&[], &DbscanParams { eps: 1.0, min_pts: 0 }).is_err());
    }

    #[test]
    fn backtrack_memberships() {
        let rooms = assign(&[Some(0), Some(1), None, Some(0), Some(2), None]);
        let walls = assign(&[Some(0), Some(0), None]);
        let s = backtrack_labels(3, &rooms, &walls).unwrap();
        assert_eq!(s.rooms, vec![vec![0], vec![1, 2], vec![]]);
        assert!(backtrack_labels(2, &rooms, &walls).is_err());
    }

    #[test]
    fn prune_thresholds() {
        // M = 1024: 50 room members fall below 51.2; 11 wall members survive 10.24.
        let m = 1024;
        let mut rooms = vec![vec![0u32]; 50];
        rooms.extend(vec![vec![1u32]; 974]);
        let mut walls = vec![Some(0u32); 11];
        walls.extend(vec![Some(1u32); 10]);
        walls.extend(vec![Some(2u32); 1003]);
        let labels = SeedLabels { rooms, walls, n_rooms: 2, n_walls: 3 };
        let p = prune_spurious(&labels, m, ROOM_PRUNE_FRACTION, WALL_PRUNE_FRACTION);
        assert_eq!(p.n_rooms, 1);
        assert!(p.rooms[0].is_empty());
        assert_eq!(p.rooms[50], vec![0]);
        assert_eq!(p.n_walls, 2);
        assert_eq!(p.walls[0], Some(0));
        assert_eq!(p.walls[11], None);
        assert_eq!(p.walls[21], Some(1));
    }

    #[test]
    fn intersections_drop_empty_sets() {
        let labels = SeedLabels {
            rooms: vec![vec![0], vec![0, 1], vec![1], vec![0]],
            walls: vec![Some(0), Some(1), Some(2), None],
            n_rooms: 2,
            n_walls: 3,
        };
        let s = intersect_rooms_walls(&labels);
        assert_eq!(s.rooms, vec![vec![0, 1, 3], vec![1, 2]]);
        assert_eq!(s.walls_per_room[0], vec![(0, vec![0]), (1, vec![1])]);
        assert_eq!(s.walls_per_room[1], vec![(1, vec![1]), (2, vec![2])]);
    }
}
