//! C ABI over the `planforge` library.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`PfStatus`]; on failure a message is available from [`pf_last_error`]
//! on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use planforge::assembly::Floorplan;
use planforge::io::{self, IoError};
use planforge::metrics::{evaluate, EvalConfig};
use planforge::pipeline::{reconstruct, PipelineConfig, PipelineError, VoteSource};
use planforge::synthgen::{generate_scene, GroundTruthPlan, LabeledPointCloud, SceneSpec};
use planforge::votes::{compute_vote_loss, NoiseSpec, VoteOffsets};
use planforge::geom::Vec3;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PfStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    VoteMismatch = 5,
    BufferTooSmall = 6,
    Internal = 7,
    Panic = 8,
}

/// A point cloud with optional labels and ground-truth plan.
pub struct PfScene {
    cloud: LabeledPointCloud,
    plan: Option<GroundTruthPlan>,
}

/// A floorplan in input coordinates.
pub struct PfFloorplan {
    plan: Floorplan,
}

/// Reconstruction settings; obtain defaults from
/// [`pf_reconstruct_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PfReconstructOptions {
    pub threads: u32,
    pub noise_sigma: f64,
    pub outlier_fraction: f64,
    pub noise_seed: u64,
    pub eps_room: f64,
    pub eps_wall: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PfCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PfMetrics {
    pub corner_precision: f64,
    pub corner_recall: f64,
    pub edge_precision: f64,
    pub edge_recall: f64,
    pub room_precision: f64,
    pub room_recall: f64,
    pub corners: PfCounts,
    pub edges: PfCounts,
    pub rooms: PfCounts,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PfVoteLoss {
    pub total: f64,
    pub room: f64,
    pub wall: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn chain(e: &dyn std::error::Error) -> String {
    let mut s = e.to_string();
    let mut src = e.source();
    while let Some(inner) = src {
        s.push_str(": ");
        s.push_str(&inner.to_string());
        src = inner.source();
    }
    s
}

type Failure = (PfStatus, String);

fn fail<T>(status: PfStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err((status, msg.into()))
}

fn io_failure(e: IoError) -> Failure {
    let status = match e {
        IoError::Io { .. } => PfStatus::Io,
        IoError::Parse { .. } | IoError::Invalid { .. } => PfStatus::Parse,
    };
    (status, chain(&e))
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let status = match e {
        PipelineError::VoteMismatch(_) => PfStatus::VoteMismatch,
        PipelineError::EmptyScene | PipelineError::Config(_) | PipelineError::Votes(_) => PfStatus::InvalidArgument,
        _ => PfStatus::Internal,
    };
    (status, chain(&e))
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside planforge");
            PfStatus::Panic
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return fail(PfStatus::NullArgument, "path is null");
    }
    let s = CStr::from_ptr(p).to_str().or_else(|_| fail(PfStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(Path::new(s))
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or((PfStatus::NullArgument, "output pointer is null".to_string()))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or((PfStatus::NullArgument, format!("{what} handle is null")))
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a synthetic scene with at most `max_rooms` rooms.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn pf_scene_generate(seed: u64, max_rooms: u32, out: *mut *mut PfScene) -> PfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let spec = SceneSpec { n_rooms_max: max_rooms as usize, ..SceneSpec::with_seed(seed) };
        let scene = generate_scene(&spec).map_err(|e| (PfStatus::InvalidArgument, chain(&e)))?;
        *out = Box::into_raw(Box::new(PfScene { cloud: scene.cloud, plan: Some(scene.plan) }));
        Ok(())
    })
}

/// Loads a scene JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_scene_load(path: *const c_char, out: *mut *mut PfScene) -> PfStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_arg(out)?;
        let (cloud, plan) = io::read_scene(path).map_err(io_failure)?;
        *out = Box::into_raw(Box::new(PfScene { cloud, plan }));
        Ok(())
    })
}

/// Writes a scene JSON file.
///
/// # Safety
/// `scene` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pf_scene_save(scene: *const PfScene, path: *const c_char) -> PfStatus {
    guard(|| {
        let scene = handle(scene, "scene")?;
        let path = path_arg(path)?;
        io::write_scene(path, &scene.cloud, scene.plan.as_ref()).map_err(io_failure)
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `scene` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_scene_point_count(scene: *const PfScene) -> usize {
    scene.as_ref().map_or(0, |s| s.cloud.len())
}

/// Copies the ground-truth plan into a new floorplan handle.
///
/// # Safety
/// `scene` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_scene_ground_truth(scene: *const PfScene, out: *mut *mut PfFloorplan) -> PfStatus {
    guard(|| {
        let scene = handle(scene, "scene")?;
        let out = out_arg(out)?;
        let Some(plan) = &scene.plan else {
            return fail(PfStatus::InvalidArgument, "scene has no ground-truth plan");
        };
        *out = Box::into_raw(Box::new(PfFloorplan { plan: io::gt_to_floorplan(plan) }));
        Ok(())
    })
}

/// # Safety
/// `scene` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_scene_free(scene: *mut PfScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

#[no_mangle]
pub extern "C" fn pf_reconstruct_options_default() -> PfReconstructOptions {
    let cfg = PipelineConfig::default();
    PfReconstructOptions {
        threads: cfg.threads as u32,
        noise_sigma: 0.0,
        outlier_fraction: 0.0,
        noise_seed: 0,
        eps_room: cfg.room_dbscan.eps,
        eps_wall: cfg.wall_dbscan.eps,
    }
}

/// Reconstructs a floorplan from a labeled scene with oracle votes. A plan
/// with zero rooms is a successful result. `options` may be null for
/// defaults.
///
/// # Safety
/// `scene` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pf_reconstruct(
    scene: *const PfScene,
    options: *const PfReconstructOptions,
    out: *mut *mut PfFloorplan,
) -> PfStatus {
    guard(|| {
        let scene = handle(scene, "scene")?;
        let out = out_arg(out)?;
        let opts = options.as_ref().copied().unwrap_or_else(|| pf_reconstruct_options_default());
        let mut cfg = PipelineConfig { threads: opts.threads as usize, ..PipelineConfig::default() };
        cfg.room_dbscan.eps = opts.eps_room;
        cfg.wall_dbscan.eps = opts.eps_wall;
        let noise =
            NoiseSpec { sigma: opts.noise_sigma, outlier_fraction: opts.outlier_fraction, rng_seed: opts.noise_seed };
        let rec = reconstruct(&scene.cloud, &VoteSource::Oracle(noise), &cfg).map_err(pipeline_failure)?;
        *out = Box::into_raw(Box::new(PfFloorplan { plan: rec.plan }));
        Ok(())
    })
}

/// Loads a floorplan JSON file (or the ground truth of a scene file).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_floorplan_load(path: *const c_char, out: *mut *mut PfFloorplan) -> PfStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = out_arg(out)?;
        let plan = io::read_plan_any(path).map_err(io_failure)?;
        *out = Box::into_raw(Box::new(PfFloorplan { plan }));
        Ok(())
    })
}

/// Number of rooms, or 0 for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_floorplan_room_count(plan: *const PfFloorplan) -> usize {
    plan.as_ref().map_or(0, |p| p.plan.len())
}

/// Id of the room at `index`.
///
/// # Safety
/// `plan` must be a live handle; `out_id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_floorplan_room_id(plan: *const PfFloorplan, index: usize, out_id: *mut u32) -> PfStatus {
    guard(|| {
        let plan = handle(plan, "floorplan")?;
        let out = out_arg(out_id)?;
        let room = plan.plan.rooms.get(index).ok_or((PfStatus::InvalidArgument, format!("no room at index {index}")))?;
        *out = room.id;
        Ok(())
    })
}

/// Copies the corners of room `index` as interleaved `x, y` pairs into
/// `xy`, which holds `capacity` corners (2 × capacity doubles). The corner
/// count is always stored in `out_len`; when it exceeds `capacity` nothing
/// is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `plan` must be a live handle, `out_len` valid, and `xy` valid for
/// `2 * capacity` doubles (may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn pf_floorplan_room_corners(
    plan: *const PfFloorplan,
    index: usize,
    xy: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> PfStatus {
    guard(|| {
        let plan = handle(plan, "floorplan")?;
        let out_len = out_arg(out_len)?;
        let room = plan.plan.rooms.get(index).ok_or((PfStatus::InvalidArgument, format!("no room at index {index}")))?;
        let corners = room.polygon.corners();
        *out_len = corners.len();
        if corners.len() > capacity {
            return fail(PfStatus::BufferTooSmall, format!("room has {} corners, buffer holds {capacity}", corners.len()));
        }
        if xy.is_null() {
            return fail(PfStatus::NullArgument, "corner buffer is null");
        }
        let buf = std::slice::from_raw_parts_mut(xy, 2 * capacity);
        for (k, c) in corners.iter().enumerate() {
            buf[2 * k] = c.x;
            buf[2 * k + 1] = c.y;
        }
        Ok(())
    })
}

/// Floorplan as JSON; release with [`pf_string_free`]. Null on failure.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pf_floorplan_to_json(plan: *const PfFloorplan) -> *mut c_char {
    let mut result = ptr::null_mut();
    let status = guard(|| {
        let plan = handle(plan, "floorplan")?;
        let text = CString::new(io::floorplan_to_json(&plan.plan))
            .or_else(|_| fail(PfStatus::Internal, "JSON contains NUL"))?;
        result = text.into_raw();
        Ok(())
    });
    if status == PfStatus::Ok {
        result
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_floorplan_free(plan: *mut PfFloorplan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scores `pred` against `gt` on a `grid`² raster (0 selects 256).
///
/// # Safety
/// `gt` and `pred` must be live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pf_evaluate(
    gt: *const PfFloorplan,
    pred: *const PfFloorplan,
    grid: u32,
    out: *mut PfMetrics,
) -> PfStatus {
    guard(|| {
        let gt = handle(gt, "ground-truth")?;
        let pred = handle(pred, "prediction")?;
        let out = out_arg(out)?;
        let mut cfg = EvalConfig::default();
        if grid != 0 {
            cfg.grid = grid as usize;
        }
        let r = evaluate(&gt.plan, &pred.plan, &cfg).map_err(|e| (PfStatus::InvalidArgument, chain(&e)))?;
        let counts = |c: planforge::metrics::Counts| PfCounts { tp: c.tp as u64, fp: c.fp as u64, fn_: c.fn_ as u64 };
        *out = PfMetrics {
            corner_precision: r.corner_precision,
            corner_recall: r.corner_recall,
            edge_precision: r.edge_precision,
            edge_recall: r.edge_recall,
            room_precision: r.room_precision,
            room_recall: r.room_recall,
            corners: counts(r.corners),
            edges: counts(r.edges),
            rooms: counts(r.rooms),
        };
        Ok(())
    })
}

unsafe fn offsets(p: *const f64, m: usize) -> Result<VoteOffsets, Failure> {
    if p.is_null() {
        return fail(PfStatus::NullArgument, "offset array is null");
    }
    let v = std::slice::from_raw_parts(p, 9 * m);
    let block = |b: usize| (0..m).map(|i| Vec3::new(v[3 * (b * m + i)], v[3 * (b * m + i) + 1], v[3 * (b * m + i) + 2])).collect();
    Ok(VoteOffsets { room_offset_0: block(0), room_offset_1: block(1), wall_offset: block(2) })
}

/// Vote loss for `m` seeds. Each array holds `9 * m` doubles: the `m`
/// room-0 offsets (xyz), then the `m` room-1 offsets, then the `m` wall
/// offsets.
///
/// # Safety
/// `pred` and `gt` must be valid for `9 * m` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pf_vote_loss(
    pred: *const f64,
    gt: *const f64,
    m: usize,
    alpha: f64,
    out: *mut PfVoteLoss,
) -> PfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let (p, g) = (offsets(pred, m)?, offsets(gt, m)?);
        let l = compute_vote_loss(&p, &g, alpha).map_err(|e| (PfStatus::InvalidArgument, chain(&e)))?;
        *out = PfVoteLoss { total: l.total, room: l.room, wall: l.wall };
        Ok(())
    })
}
