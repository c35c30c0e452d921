use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use planforge_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pf_last_error()) }.to_string_lossy().into_owned()
}

fn generate(seed: u64, max_rooms: u32) -> *mut PfScene {
    let mut scene = ptr::null_mut();
    assert_eq!(unsafe { pf_scene_generate(seed, max_rooms, &mut scene) }, PfStatus::Ok);
    assert!(!scene.is_null());
    scene
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(pf_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn reconstruct_and_evaluate_roundtrip() {
    let scene = generate(3, 4);
    unsafe {
        assert!(pf_scene_point_count(scene) > 0);
        let mut gt = ptr::null_mut();
        assert_eq!(pf_scene_ground_truth(scene, &mut gt), PfStatus::Ok);
        let mut pred = ptr::null_mut();
        assert_eq!(pf_reconstruct(scene, ptr::null(), &mut pred), PfStatus::Ok);
        assert!(pf_floorplan_room_count(pred) >= 1);

        let mut m = PfMetrics::default();
        assert_eq!(pf_evaluate(gt, gt, 0, &mut m), PfStatus::Ok);
        assert_eq!(m.room_precision, 1.0);
        assert_eq!(m.corner_recall, 1.0);
        assert_eq!(pf_evaluate(gt, pred, 256, &mut m), PfStatus::Ok);
        assert!(m.room_recall > 0.0);

        pf_floorplan_free(gt);
        pf_floorplan_free(pred);
        pf_scene_free(scene);
    }
}

#[test]
fn room_corners_reports_required_capacity() {
    let scene = generate(1, 2);
    unsafe {
        let mut gt = ptr::null_mut();
        assert_eq!(pf_scene_ground_truth(scene, &mut gt), PfStatus::Ok);
        let mut n = 0usize;
        assert_eq!(pf_floorplan_room_corners(gt, 0, ptr::null_mut(), 0, &mut n), PfStatus::BufferTooSmall);
        assert!(n >= 4);
        let mut buf = vec![f64::NAN; 2 * n];
        assert_eq!(pf_floorplan_room_corners(gt, 0, buf.as_mut_ptr(), n, &mut n), PfStatus::Ok);
        assert!(buf.iter().all(|v| v.is_finite()));

        let mut id = u32::MAX;
        assert_eq!(pf_floorplan_room_id(gt, 0, &mut id), PfStatus::Ok);
        assert_ne!(id, u32::MAX);
        let count = pf_floorplan_room_count(gt);
        assert_eq!(pf_floorplan_room_id(gt, count, &mut id), PfStatus::InvalidArgument);
        assert!(last_error().contains("no room"));

        pf_floorplan_free(gt);
        pf_scene_free(scene);
    }
}

#[test]
fn json_and_files_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let scene_path = CString::new(dir.path().join("s.json").to_str().unwrap()).unwrap();
    let scene = generate(5, 3);
    unsafe {
        assert_eq!(pf_scene_save(scene, scene_path.as_ptr()), PfStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(pf_scene_load(scene_path.as_ptr(), &mut loaded), PfStatus::Ok);
        assert_eq!(pf_scene_point_count(loaded), pf_scene_point_count(scene));

        let mut gt = ptr::null_mut();
        assert_eq!(pf_scene_ground_truth(loaded, &mut gt), PfStatus::Ok);
        let json = pf_floorplan_to_json(gt);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        pf_string_free(json);
        assert!(text.contains("\"rooms\""));

        let plan_path = dir.path().join("p.json");
        std::fs::write(&plan_path, &text).unwrap();
        let plan_c = CString::new(plan_path.to_str().unwrap()).unwrap();
        let mut plan = ptr::null_mut();
        assert_eq!(pf_floorplan_load(plan_c.as_ptr(), &mut plan), PfStatus::Ok);
        assert_eq!(pf_floorplan_room_count(plan), pf_floorplan_room_count(gt));

        pf_floorplan_free(plan);
        pf_floorplan_free(gt);
        pf_scene_free(loaded);
        pf_scene_free(scene);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut scene = ptr::null_mut();
        assert_eq!(pf_scene_load(ptr::null(), &mut scene), PfStatus::NullArgument);
        let missing = CString::new("/nonexistent/planforge/scene.json").unwrap();
        assert_eq!(pf_scene_load(missing.as_ptr(), &mut scene), PfStatus::Io);
        assert!(last_error().contains("scene.json"));

        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, "{not json").unwrap();
        let bad_c = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(pf_scene_load(bad_c.as_ptr(), &mut scene), PfStatus::Parse);
        assert!(scene.is_null());

        assert_eq!(pf_scene_generate(0, 0, &mut scene), PfStatus::InvalidArgument);
        assert_eq!(pf_reconstruct(ptr::null(), ptr::null(), ptr::null_mut()), PfStatus::NullArgument);
        assert!(pf_floorplan_to_json(ptr::null()).is_null());
        assert_eq!(pf_scene_point_count(ptr::null()), 0);
        pf_scene_free(ptr::null_mut());
        pf_floorplan_free(ptr::null_mut());
        pf_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_options_are_rejected() {
    let scene = generate(2, 2);
    unsafe {
        let mut opts = pf_reconstruct_options_default();
        assert_eq!(opts.threads, 1);
        opts.threads = 0;
        let mut out = ptr::null_mut();
        assert_eq!(pf_reconstruct(scene, &opts, &mut out), PfStatus::InvalidArgument);
        assert!(out.is_null());
        pf_scene_free(scene);
    }
}

#[test]
fn vote_loss_matches_hand_value() {
    // One seed: room offsets swapped (no cost), wall off by 0.5 in x.
    let gt = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let pred = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 0.0];
    let mut loss = PfVoteLoss::default();
    let status = unsafe { pf_vote_loss(pred.as_ptr(), gt.as_ptr(), 1, 10.0, &mut loss) };
    assert_eq!(status, PfStatus::Ok);
    assert!(loss.room.abs() < 1e-12);
    assert!((loss.wall - 0.125).abs() < 1e-12);
    assert!((loss.total - 1.25).abs() < 1e-12);
}

fn target_dir() -> PathBuf {
    // tests/<exe> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn find_cc() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(String::from)
}

#[test]
fn c_program_links_against_static_library() {
    let Some(cc) = find_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let lib = target_dir().join("libplanforge_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "planforge.h"
int main(void) {
    PfScene *scene = NULL;
    PfFloorplan *gt = NULL, *pred = NULL;
    if (pf_scene_generate(7, 3, &scene) != PF_STATUS_OK) return 1;
    if (pf_scene_ground_truth(scene, &gt) != PF_STATUS_OK) return 2;
    PfReconstructOptions opts = pf_reconstruct_options_default();
    if (pf_reconstruct(scene, &opts, &pred) != PF_STATUS_OK) return 3;
    PfMetrics m;
    if (pf_evaluate(gt, pred, 0, &m) != PF_STATUS_OK) return 4;
    printf("%zu %.3f\n", pf_floorplan_room_count(pred), m.room_recall);
    if (pf_scene_load(NULL, &scene) != PF_STATUS_NULL_ARGUMENT) return 5;
    if (pf_last_error()[0] == '\0') return 6;
    pf_floorplan_free(pred);
    pf_floorplan_free(gt);
    pf_scene_free(scene);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("capi_demo");
    let out = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "compile failed: {}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.split_whitespace().count(), 2, "{stdout}");
}
