//! JSON file formats for scenes, votes, floorplans and reports.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{Floorplan, Room};
use crate::geom::{NormalizeFrame, SimplePolygon, Vec3};
use crate::synthgen::{GroundTruthPlan, GtRoom, LabeledPointCloud, PointLabels};
use crate::votes::{SeedSet, VoteSet};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed JSON")]
    Parse { path: String, source: serde_json::Error },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|source| IoError::Parse { path: path.display().to_string(), source })
}

fn invalid(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::Invalid { path: path.display().to_string(), msg: msg.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub points: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_label_0: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_label_1: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_label: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_rooms: Option<Vec<GtRoom>>,
}

impl SceneFile {
    pub fn new(cloud: &LabeledPointCloud, plan: Option<&GroundTruthPlan>) -> Self {
        let l = cloud.labels.as_ref();
        Self {
            points: cloud.points.clone(),
            room_label_0: l.map(|l| l.room_label_0.clone()),
            room_label_1: l.map(|l| l.room_label_1.clone()),
            wall_label: l.map(|l| l.wall_label.clone()),
            gt_rooms: plan.map(|p| p.rooms.clone()),
        }
    }

    /// Splits into cloud and optional plan, checking label lengths.
    pub fn into_parts(self, path: &Path) -> Result<(LabeledPointCloud, Option<GroundTruthPlan>), IoError> {
        let n = self.points.len();
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(invalid(path, "non-finite point coordinate"));
        }
        let labels = match (self.room_label_0, self.room_label_1, self.wall_label) {
            (Some(room_label_0), Some(room_label_1), Some(wall_label)) => {
                if room_label_0.len() != n || room_label_1.len() != n || wall_label.len() != n {
                    return Err(invalid(path, "label arrays must match the number of points"));
                }
                Some(PointLabels { room_label_0, room_label_1, wall_label })
            }
            (None, None, None) => None,
            _ => return Err(invalid(path, "room_label_0, room_label_1 and wall_label must be given together")),
        };
        Ok((LabeledPointCloud { points: self.points, labels }, self.gt_rooms.map(|rooms| GroundTruthPlan { rooms })))
    }
}

pub fn read_scene(path: &Path) -> Result<(LabeledPointCloud, Option<GroundTruthPlan>), IoError> {
    parse::<SceneFile>(path, &read(path)?)?.into_parts(path)
}

pub fn write_scene(path: &Path, cloud: &LabeledPointCloud, plan: Option<&GroundTruthPlan>) -> Result<(), IoError> {
    let text = serde_json::to_string(&SceneFile::new(cloud, plan)).expect("scene serializes");
    write(path, &text)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VotesFile {
    pub seed_indices: Vec<usize>,
    pub seed_positions: Vec<Vec3>,
    pub room_vote_0: Vec<Vec3>,
    pub room_vote_1: Vec<Vec3>,
    pub wall_vote: Vec<Vec3>,
}

impl From<&VoteSet> for VotesFile {
    fn from(v: &VoteSet) -> Self {
        Self {
            seed_indices: v.seeds.indices.clone(),
            seed_positions: v.seeds.positions.clone(),
            room_vote_0: v.room_vote_0.clone(),
            room_vote_1: v.room_vote_1.clone(),
            wall_vote: v.wall_vote.clone(),
        }
    }
}

impl From<VotesFile> for VoteSet {
    fn from(f: VotesFile) -> Self {
        VoteSet {
            seeds: SeedSet { indices: f.seed_indices, positions: f.seed_positions },
            room_vote_0: f.room_vote_0,
            room_vote_1: f.room_vote_1,
            wall_vote: f.wall_vote,
        }
    }
}

/// Reads a votes file; structural consistency is checked by the pipeline
/// against the scene it is paired with.
pub fn read_votes(path: &Path) -> Result<VoteSet, IoError> {
    Ok(parse::<VotesFile>(path, &read(path)?)?.into())
}

pub fn write_votes(path: &Path, votes: &VoteSet) -> Result<(), IoError> {
    write(path, &serde_json::to_string(&VotesFile::from(votes)).expect("votes serialize"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoomEntry {
    pub id: u32,
    pub polygon: SimplePolygon,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloorplanFile {
    pub rooms: Vec<RoomEntry>,
    pub units: String,
}

impl From<&Floorplan> for FloorplanFile {
    fn from(p: &Floorplan) -> Self {
        Self {
            rooms: p.rooms.iter().map(|r| RoomEntry { id: r.id, polygon: r.polygon.clone() }).collect(),
            units: "meters".into(),
        }
    }
}

pub fn floorplan_to_json(plan: &Floorplan) -> String {
    serde_json::to_string_pretty(&FloorplanFile::from(plan)).expect("floorplan serializes")
}

pub fn floorplan_from_json(text: &str, path: &Path) -> Result<Floorplan, IoError> {
    let f: FloorplanFile = parse(path, text)?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = f.rooms.iter().find(|r| !seen.insert(r.id)) {
        return Err(invalid(path, format!("duplicate room id {}", dup.id)));
    }
    Ok(Floorplan {
        rooms: f.rooms.into_iter().map(|r| Room { id: r.id, polygon: r.polygon }).collect(),
        frame: NormalizeFrame::IDENTITY,
    })
}

pub fn read_floorplan(path: &Path) -> Result<Floorplan, IoError> {
    floorplan_from_json(&read(path)?, path)
}

pub fn write_floorplan(path: &Path, plan: &Floorplan) -> Result<(), IoError> {
    write(path, &floorplan_to_json(plan))
}

/// Ground-truth plan as a floorplan with room ids equal to labels.
pub fn gt_to_floorplan(plan: &GroundTruthPlan) -> Floorplan {
    Floorplan {
        rooms: plan.rooms.iter().map(|r| Room { id: r.label, polygon: r.polygon.clone() }).collect(),
        frame: NormalizeFrame::IDENTITY,
    }
}

/// Reads either a floorplan file or a scene file carrying `gt_rooms`.
pub fn read_plan_any(path: &Path) -> Result<Floorplan, IoError> {
    let text = read(path)?;
    let value: serde_json::Value = parse(path, &text)?;
    if value.get("gt_rooms").is_some() {
        let (_, plan) = parse::<SceneFile>(path, &text)?.into_parts(path)?;
        return Ok(gt_to_floorplan(&plan.unwrap_or_default()));
    }
    floorplan_from_json(&text, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    write(path, &serde_json::to_string_pretty(value).expect("value serializes"))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    write(path, text)
}

/// Index of a generated dataset; paths are relative to the manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub samples: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub seed: u64,
    pub scene: String,
}

pub fn read_manifest(path: &Path) -> Result<Manifest, IoError> {
    parse(path, &read(path)?)
}

/// True when the file parses as a manifest rather than a scene or plan.
pub fn is_manifest(path: &Path) -> bool {
    read(path)
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .is_some_and(|v| v.get("samples").is_some())
}
