//! Seed sampling, ground-truth-derived vote oracle and the vote-offset loss.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::synthgen::LabeledPointCloud;

/// Balancing factor between room and wall terms.
pub const DEFAULT_ALPHA: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VoteError {
    #[error("cannot sample {requested} seeds from {available} points")]
    TooFewPoints { requested: usize, available: usize },
    #[error("point cloud carries no ground-truth labels")]
    MissingLabels,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(&'static str),
    #[error("non-finite vote or seed")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeedSet {
    pub indices: Vec<usize>,
    pub positions: Vec<Vec3>,
}

impl SeedSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoteSet {
    pub seeds: SeedSet,
    pub room_vote_0: Vec<Vec3>,
    pub room_vote_1: Vec<Vec3>,
    pub wall_vote: Vec<Vec3>,
}

impl VoteSet {
    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Checks lengths, finiteness and index uniqueness.
    pub fn validate(&self) -> Result<(), VoteError> {
        let m = self.seeds.indices.len();
        for (name, len) in [
            ("seed_positions", self.seeds.positions.len()),
            ("room_vote_0", self.room_vote_0.len()),
            ("room_vote_1", self.room_vote_1.len()),
            ("wall_vote", self.wall_vote.len()),
        ] {
            if len != m {
                return Err(VoteError::LengthMismatch(format!("{name} has {len} entries, expected {m}")));
            }
        }
        let all = self
            .seeds
            .positions
            .iter()
            .chain(&self.room_vote_0)
            .chain(&self.room_vote_1)
            .chain(&self.wall_vote);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(VoteError::NonFinite);
        }
        let mut sorted = self.seeds.indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(VoteError::LengthMismatch("seed indices are not unique".into()));
        }
        Ok(())
    }

    /// Offsets `vote - seed` for each of the three votes.
    pub fn offsets(&self) -> VoteOffsets {
        let sub = |votes: &[Vec3]| votes.iter().zip(&self.seeds.positions).map(|(&v, &s)| v - s).collect();
        VoteOffsets {
            room_offset_0: sub(&self.room_vote_0),
            room_offset_1: sub(&self.room_vote_1),
            wall_offset: sub(&self.wall_vote),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VoteOffsets {
    pub room_offset_0: Vec<Vec3>,
    pub room_offset_1: Vec<Vec3>,
    pub wall_offset: Vec<Vec3>,
}

impl VoteOffsets {
    pub fn len(&self) -> usize {
        self.wall_offset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wall_offset.is_empty()
    }

    fn check(&self, what: &str) -> Result<usize, VoteError> {
        let m = self.wall_offset.len();
        if self.room_offset_0.len() != m || self.room_offset_1.len() != m {
            return Err(VoteError::LengthMismatch(format!("{what} offset lists differ in length")));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub outlier_fraction: f64,
    pub rng_seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { sigma: 0.0, outlier_fraction: 0.0, rng_seed: 0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), VoteError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(VoteError::InvalidNoise("sigma must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(VoteError::InvalidNoise("outlier_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Farthest-point sampling of `m` seeds, starting from the point nearest
/// the centroid (ties to the lowest index).
pub fn subsample_seeds(points: &[Vec3], m: usize) -> Result<SeedSet, VoteError> {
    let n = points.len();
    if m == 0 || m > n {
        return Err(VoteError::TooFewPoints { requested: m, available: n });
    }
    let centroid = crate::geom::centroid3(points).expect("non-empty");
    let mut first = 0;
    for (i, p) in points.iter().enumerate() {
        if p.dist2(centroid) < points[first].dist2(centroid) {
            first = i;
        }
    }
    let mut indices = Vec::with_capacity(m);
    let mut dist = vec![f64::INFINITY; n];
    let mut next = first;
    for _ in 0..m {
        indices.push(next);
        let s = points[next];
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = points[i].dist2(s);
            if nd < *d {
                *d = nd;
            }
            if *d > best.0 {
                best = (*d, i);
            }
        }
        next = best.1;
    }
    let positions = indices.iter().map(|&i| points[i]).collect();
    Ok(SeedSet { indices, positions })
}

/// Centroid per label; each point contributes once to every distinct label
/// in its label tuple.
fn label_centroids(points: &[Vec3], labels_of: impl Fn(usize) -> (u32, u32)) -> HashMap<u32, Vec3> {
    let mut acc: HashMap<u32, (Vec3, usize)> = HashMap::new();
    let mut add = |l: u32, p: Vec3| {
        let e = acc.entry(l).or_insert((Vec3::default(), 0));
        e.0 = e.0 + p;
        e.1 += 1;
    };
    for (i, &p) in points.iter().enumerate() {
        let (a, b) = labels_of(i);
        add(a, p);
        if b != a {
            add(b, p);
        }
    }
    acc.into_iter().map(|(l, (sum, n))| (l, sum / n as f64)).collect()
}

/// Votes derived from ground-truth labels: room votes point to the centroid
/// of every point carrying that room label, wall votes to the centroid of
/// the seed's wall. Gaussian noise and uniform outliers are optional.
pub fn oracle_votes(cloud: &LabeledPointCloud, seeds: &SeedSet, noise: &NoiseSpec) -> Result<VoteSet, VoteError> {
    noise.validate()?;
    let labels = cloud.labels.as_ref().ok_or(VoteError::MissingLabels)?;
    let n = cloud.points.len();
    if labels.room_label_0.len() != n || labels.room_label_1.len() != n || labels.wall_label.len() != n {
        return Err(VoteError::LengthMismatch("label arrays differ from point count".into()));
    }
    if seeds.positions.len() != seeds.indices.len() {
        return Err(VoteError::LengthMismatch("seed positions and indices differ".into()));
    }
    if let Some(&bad) = seeds.indices.iter().find(|&&i| i >= n) {
        return Err(VoteError::LengthMismatch(format!("seed index {bad} out of range for {n} points")));
    }

    let rooms = label_centroids(&cloud.points, |i| (labels.room_label_0[i], labels.room_label_1[i]));
    let walls = label_centroids(&cloud.points, |i| (labels.wall_label[i], labels.wall_label[i]));

    let mut rng = ChaCha8Rng::seed_from_u64(noise.rng_seed);
    let m = seeds.len();
    let mut outlier = vec![false; m];
    let n_out = (noise.outlier_fraction * m as f64).round() as usize;
    for i in index::sample(&mut rng, m, n_out.min(m)) {
        outlier[i] = true;
    }
    let gauss = (noise.sigma > 0.0).then(|| Normal::new(0.0, noise.sigma).expect("valid sigma"));
    let (lo, hi) = bounds3(&cloud.points);

    let jitter = |rng: &mut ChaCha8Rng, v: Vec3| match &gauss {
        Some(g) => v + Vec3::new(g.sample(rng), g.sample(rng), g.sample(rng)),
        None => v,
    };
    let uniform = |rng: &mut ChaCha8Rng| {
        let mut c = |a: f64, b: f64| if b > a { rng.random_range(a..=b) } else { a };
        Vec3::new(c(lo.x, hi.x), c(lo.y, hi.y), c(lo.z, hi.z))
    };

    let mut out = VoteSet { seeds: seeds.clone(), ..Default::default() };
    for (k, &i) in seeds.indices.iter().enumerate() {
        let (a, b, w) = (labels.room_label_0[i], labels.room_label_1[i], labels.wall_label[i]);
        let (r0, r1, wv) = if outlier[k] {
            (uniform(&mut rng), uniform(&mut rng), uniform(&mut rng))
        } else {
            let r0 = jitter(&mut rng, rooms[&a]);
            let r1 = if a == b { r0 } else { jitter(&mut rng, rooms[&b]) };
            (r0, r1, jitter(&mut rng, walls[&w]))
        };
        out.room_vote_0.push(r0);
        out.room_vote_1.push(r1);
        out.wall_vote.push(wv);
    }
    Ok(out)
}

fn bounds3(points: &[Vec3]) -> (Vec3, Vec3) {
    let first = points.first().copied().unwrap_or_default();
    points.iter().fold((first, first), |(lo, hi), p| {
        (
            Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z)),
            Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z)),
        )
    })
}

/// Smooth-L1 (Huber with unit threshold).
pub fn smooth_l1(a: f64) -> f64 {
    if a.abs() < 1.0 {
        0.5 * a * a
    } else {
        a.abs() - 0.5
    }
}

fn smooth_l1_grad(a: f64) -> f64 {
    if a.abs() < 1.0 {
        a
    } else {
        a.signum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoteLoss {
    pub total: f64,
    pub room: f64,
    pub wall: f64,
}

/// Per-seed room error: the cheaper of the two pairings of predicted and
/// ground-truth room offsets. Returns the error and whether pairs were swapped.
fn room_error(p0: Vec3, p1: Vec3, g0: Vec3, g1: Vec3) -> (f64, bool) {
    let straight = (g0 - p0).norm() + (g1 - p1).norm();
    let swapped = (g0 - p1).norm() + (g1 - p0).norm();
    if swapped < straight {
        (swapped, true)
    } else {
        (straight, false)
    }
}

fn check_pair(pred: &VoteOffsets, gt: &VoteOffsets) -> Result<usize, VoteError> {
    let m = pred.check("predicted")?;
    if gt.check("ground-truth")? != m {
        return Err(VoteError::LengthMismatch(format!("pred has {m} seeds, gt has {}", gt.len())));
    }
    Ok(m)
}

/// `L = L_room + alpha * L_wall`, each a mean of smooth-L1 over seeds.
/// Zero seeds give zero loss.
pub fn compute_vote_loss(pred: &VoteOffsets, gt: &VoteOffsets, alpha: f64) -> Result<VoteLoss, VoteError> {
    let m = check_pair(pred, gt)?;
    if m == 0 {
        return Ok(VoteLoss { total: 0.0, room: 0.0, wall: 0.0 });
    }
    let mut room = 0.0;
    let mut wall = 0.0;
    for i in 0..m {
        let (e, _) = room_error(pred.room_offset_0[i], pred.room_offset_1[i], gt.room_offset_0[i], gt.room_offset_1[i]);
        room += smooth_l1(e);
        wall += smooth_l1((gt.wall_offset[i] - pred.wall_offset[i]).norm());
    }
    room /= m as f64;
    wall /= m as f64;
    Ok(VoteLoss { total: room + alpha * wall, room, wall })
}

/// Gradient of the total loss with respect to the predicted offsets. At a
/// zero-length error the subgradient 0 is used.
pub fn vote_loss_gradient(pred: &VoteOffsets, gt: &VoteOffsets, alpha: f64) -> Result<VoteOffsets, VoteError> {
    let m = check_pair(pred, gt)?;
    let unit = |d: Vec3| {
        let n = d.norm();
        if n > 0.0 {
            d / n
        } else {
            Vec3::default()
        }
    };
    let mut out = VoteOffsets {
        room_offset_0: vec![Vec3::default(); m],
        room_offset_1: vec![Vec3::default(); m],
        wall_offset: vec![Vec3::default(); m],
    };
    let inv = 1.0 / m.max(1) as f64;
    for i in 0..m {
        let (p0, p1) = (pred.room_offset_0[i], pred.room_offset_1[i]);
        let (g0, g1) = (gt.room_offset_0[i], gt.room_offset_1[i]);
        let (e, swapped) = room_error(p0, p1, g0, g1);
        let s = smooth_l1_grad(e) * inv;
        let (t0, t1) = if swapped { (g1, g0) } else { (g0, g1) };
        out.room_offset_0[i] = unit(p0 - t0) * s;
        out.room_offset_1[i] = unit(p1 - t1) * s;

        let d = pred.wall_offset[i] - gt.wall_offset[i];
        out.wall_offset[i] = unit(d) * (alpha * smooth_l1_grad(d.norm()) * inv);
    }
    Ok(out)
}

/// Ground-truth offsets for `seeds`: noiseless oracle votes minus seeds.
pub fn ground_truth_offsets(cloud: &LabeledPointCloud, seeds: &SeedSet) -> Result<VoteOffsets, VoteError> {
    Ok(oracle_votes(cloud, seeds, &NoiseSpec::default())?.offsets())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn single(r0: Vec3, r1: Vec3, w: Vec3) -> VoteOffsets {
        VoteOffsets { room_offset_0: vec![r0], room_offset_1: vec![r1], wall_offset: vec![w] }
    }

    #[test]
    fn smooth_l1_branches_meet() {
        assert_eq!(smooth_l1(1.0), 0.5);
        assert!((smooth_l1(1.0 - 1e-12) - 0.5).abs() < 1e-11);
        assert_eq!(smooth_l1(0.5), 0.125);
        assert_eq!(smooth_l1(-3.0), 2.5);
    }

    #[test]
    fn wall_only_error() {
        let z = Vec3::default();
        let gt = single(z, z, z);
        let pred = single(z, z, v(0.5, 0., 0.));
        let l = compute_vote_loss(&pred, &gt, 10.0).unwrap();
        assert_eq!(l, VoteLoss { total: 1.25, room: 0.0, wall: 0.125 });
    }

    #[test]
    fn length_mismatch() {
        let z = Vec3::default();
        let gt = single(z, z, z);
        let pred = VoteOffsets::default();
        assert!(matches!(compute_vote_loss(&pred, &gt, 10.0), Err(VoteError::LengthMismatch(_))));
    }

    #[test]
    fn fps_single_seed_is_nearest_to_centroid() {
        let pts = vec![v(0., 0., 0.), v(10., 0., 0.), v(4., 0., 0.), v(6., 0., 0.)];
        let s = subsample_seeds(&pts, 1).unwrap();
        // Centroid x = 5; indices 2 and 3 tie, lowest wins.
        assert_eq!(s.indices, vec![2]);
        assert!(subsample_seeds(&pts, 5).is_err());
        assert!(subsample_seeds(&pts, 0).is_err());
    }
}
