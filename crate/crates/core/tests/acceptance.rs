//! End-to-end acceptance suite. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use planforge::assembly::{assemble, Floorplan};
use planforge::cluster::{dbscan, DbscanParams};
use planforge::geom::{NormalizeFrame, SimplePolygon, Vec2, Vec3};
use planforge::io::{floorplan_to_json, gt_to_floorplan};
use planforge::metrics::{evaluate, mean_report, EvalConfig, MetricsReport};
use planforge::perimeter::{sequence_cost, WallSegment};
use planforge::pipeline::{reconstruct, PipelineConfig, Reconstruction, VoteSource};
use planforge::synthgen::{generate_scene, scene_with_rooms, Scene, SceneSpec};
use planforge::votes::{compute_vote_loss, vote_loss_gradient, NoiseSpec, VoteOffsets};

const SUITE: u64 = 50;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn suite_scenes() -> Vec<Scene> {
    (0..SUITE).map(|s| generate_scene(&SceneSpec::with_seed(s)).expect("scene")).collect()
}

struct SuiteRun {
    reports: Vec<MetricsReport>,
    recs: Vec<Reconstruction>,
    elapsed: Duration,
}

fn run_suite(scenes: &[Scene], noise: impl Fn(u64) -> NoiseSpec, cfg: &PipelineConfig) -> SuiteRun {
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut recs = Vec::new();
    for (seed, scene) in scenes.iter().enumerate() {
        let rec = reconstruct(&scene.cloud, &VoteSource::Oracle(noise(seed as u64)), cfg).expect("reconstruct");
        let gt = gt_to_floorplan(&scene.plan);
        reports.push(evaluate(&gt, &rec.plan, &EvalConfig::default()).expect("evaluate"));
        recs.push(rec);
    }
    SuiteRun { reports, recs, elapsed: start.elapsed() }
}

fn fmt_means(r: &MetricsReport) -> String {
    let v = r.values();
    format!(
        "corner P/R {:.4}/{:.4}, edge P/R {:.4}/{:.4}, room P/R {:.4}/{:.4}",
        v[0], v[1], v[2], v[3], v[4], v[5]
    )
}

fn zero_noise(run: &SuiteRun) -> Outcome {
    let m = mean_report(&run.reports).unwrap();
    let pass = m.corner_precision >= 0.98
        && m.corner_recall >= 0.98
        && m.edge_precision >= 0.97
        && m.edge_recall >= 0.97
        && m.room_precision >= 0.98
        && m.room_recall >= 0.98
        && run.elapsed < Duration::from_secs(60);
    Outcome {
        name: "zero-noise end-to-end (50 scenes)",
        pass,
        detail: format!("{} in {:.2} s", fmt_means(&m), run.elapsed.as_secs_f64()),
    }
}

fn noise_spec(seed: u64) -> NoiseSpec {
    NoiseSpec { sigma: 0.02, outlier_fraction: 0.02, rng_seed: seed }
}

fn noise_robustness(scenes: &[Scene]) -> (Outcome, String) {
    let run = run_suite(scenes, noise_spec, &PipelineConfig::default());
    let m = mean_report(&run.reports).unwrap();
    let outcome = Outcome {
        name: "noise robustness (sigma 2 cm, 2% outliers)",
        pass: m.room_recall >= 0.90 && m.corner_precision >= 0.90,
        detail: format!("{} (targets: room recall >= 0.90, corner precision >= 0.90)", fmt_means(&m)),
    };
    let mut cfg = PipelineConfig::default();
    cfg.wall_dbscan.eps = 0.05;
    let wide = mean_report(&run_suite(scenes, noise_spec, &cfg).reports).unwrap();
    let note = format!("same noise with wall eps 0.05: {}", fmt_means(&wide));
    (outcome, note)
}

fn offsets(r0: &[[f64; 3]], r1: &[[f64; 3]], w: &[[f64; 3]]) -> VoteOffsets {
    let v = |a: &[[f64; 3]]| a.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect();
    VoteOffsets { room_offset_0: v(r0), room_offset_1: v(r1), wall_offset: v(w) }
}

fn random_offsets(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> VoteOffsets {
    let mut v = || (0..m).map(|_| Vec3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))).collect();
    VoteOffsets { room_offset_0: v(), room_offset_1: v(), wall_offset: v() }
}

fn swapped(o: &VoteOffsets) -> VoteOffsets {
    VoteOffsets {
        room_offset_0: o.room_offset_1.clone(),
        room_offset_1: o.room_offset_0.clone(),
        wall_offset: o.wall_offset.clone(),
    }
}

fn flat(o: &VoteOffsets) -> Vec<f64> {
    o.room_offset_0
        .iter()
        .chain(&o.room_offset_1)
        .chain(&o.wall_offset)
        .flat_map(|p| [p.x, p.y, p.z])
        .collect()
}

fn unflat(v: &[f64], m: usize) -> VoteOffsets {
    let block = |b: usize| (0..m).map(|i| Vec3::new(v[3 * (b * m + i)], v[3 * (b * m + i) + 1], v[3 * (b * m + i) + 2])).collect();
    VoteOffsets { room_offset_0: block(0), room_offset_1: block(1), wall_offset: block(2) }
}

/// True when every per-seed error is away from the smooth-L1 kink, the
/// pairing tie and the norm singularity.
fn differentiable(p: &VoteOffsets, g: &VoteOffsets) -> bool {
    let margin = 1e-2;
    (0..p.len()).all(|i| {
        let d = [
            (g.room_offset_0[i] - p.room_offset_0[i]).norm(),
            (g.room_offset_1[i] - p.room_offset_1[i]).norm(),
            (g.room_offset_0[i] - p.room_offset_1[i]).norm(),
            (g.room_offset_1[i] - p.room_offset_0[i]).norm(),
            (g.wall_offset[i] - p.wall_offset[i]).norm(),
        ];
        let (straight, cross) = (d[0] + d[1], d[2] + d[3]);
        let e = straight.min(cross);
        d.iter().all(|&x| x > margin)
            && (straight - cross).abs() > margin
            && (e - 1.0).abs() > margin
            && (d[4] - 1.0).abs() > margin
    })
}

fn loss_correctness() -> Outcome {
    let mut failures = Vec::new();
    let z = [0.0; 3];
    // Tabulated examples with hand-evaluated values.
    let cases: [(&str, VoteOffsets, VoteOffsets, [f64; 3]); 4] = [
        (
            "identical",
            offsets(&[[0.3, -0.2, 0.1]], &[[0.5, 0.5, 0.0]], &[[1.0, 2.0, 3.0]]),
            offsets(&[[0.3, -0.2, 0.1]], &[[0.5, 0.5, 0.0]], &[[1.0, 2.0, 3.0]]),
            [0.0, 0.0, 0.0],
        ),
        ("wall 0.5", offsets(&[z], &[z], &[[0.5, 0.0, 0.0]]), offsets(&[z], &[z], &[z]), [1.25, 0.0, 0.125]),
        (
            "swapped rooms",
            offsets(&[[-1.0, 0.0, 0.0]], &[[1.0, 0.0, 0.0]], &[z]),
            offsets(&[[1.0, 0.0, 0.0]], &[[-1.0, 0.0, 0.0]], &[z]),
            [0.0, 0.0, 0.0],
        ),
        ("min pairing", offsets(&[z], &[z], &[z]), offsets(&[[1.0, 0.0, 0.0]], &[z], &[z]), [0.5, 0.5, 0.0]),
    ];
    for (name, pred, gt, [total, room, wall]) in &cases {
        let l = compute_vote_loss(pred, gt, 10.0).unwrap();
        if (l.total, l.room, l.wall) != (*total, *room, *wall) {
            failures.push(format!("{name}: got ({}, {}, {})", l.total, l.room, l.wall));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut swap_bad = 0;
    for _ in 0..1000 {
        let m = rng.random_range(1..=8);
        let (p, g) = (random_offsets(&mut rng, m, 2.0), random_offsets(&mut rng, m, 2.0));
        let base = compute_vote_loss(&p, &g, 10.0).unwrap().total;
        for (a, b) in [(swapped(&p), g.clone()), (p.clone(), swapped(&g)), (swapped(&p), swapped(&g))] {
            let l = compute_vote_loss(&a, &b, 10.0).unwrap().total;
            if (l - base).abs() > 1e-12 * (1.0 + base.abs()) {
                swap_bad += 1;
            }
        }
    }
    if swap_bad > 0 {
        failures.push(format!("{swap_bad} swap-invariance violations"));
    }

    let (mut checked, mut worst) = (0, 0.0f64);
    let h = 1e-5;
    while checked < 100 {
        let m = rng.random_range(1..=4);
        let (p, g) = (random_offsets(&mut rng, m, 1.0), random_offsets(&mut rng, m, 1.0));
        if !differentiable(&p, &g) {
            continue;
        }
        let analytic = flat(&vote_loss_gradient(&p, &g, 10.0).unwrap());
        let x = flat(&p);
        let mut num = vec![0.0; x.len()];
        for k in 0..x.len() {
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[k] += h;
            dn[k] -= h;
            let f = |v: &[f64]| compute_vote_loss(&unflat(v, m), &g, 10.0).unwrap().total;
            num[k] = (f(&up) - f(&dn)) / (2.0 * h);
        }
        let diff: f64 = analytic.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / norm);
        checked += 1;
    }
    if worst >= 1e-4 {
        failures.push(format!("gradient relative error {worst:.2e}"));
    }
    Outcome {
        name: "vote loss correctness",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("4 examples exact, 3000 swap checks, 100 gradient checks (worst rel. err {worst:.1e})")
        } else {
            failures.join("; ")
        },
    }
}

/// Components of the eps-graph over core points, extended by each border
/// point joining the earliest-discovered adjacent component. Returned as a
/// canonical partition: sorted member lists plus the noise set.
fn eps_graph_partition(points: &[Vec3], eps: f64, min_pts: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = points.len();
    let adj: Vec<Vec<usize>> =
        (0..n).map(|i| (0..n).filter(|&j| points[i].dist(points[j]) <= eps).collect()).collect();
    let core: Vec<bool> = adj.iter().map(|a| a.len() >= min_pts).collect();
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for s in 0..n {
        if !core[s] || comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = n_comp;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if core[j] && comp[j] == usize::MAX {
                    comp[j] = n_comp;
                    stack.push(j);
                }
            }
        }
        n_comp += 1;
    }
    let mut noise = Vec::new();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for i in 0..n {
        let c = if core[i] { Some(comp[i]) } else { adj[i].iter().filter(|&&j| core[j]).map(|&j| comp[j]).min() };
        match c {
            Some(c) => groups[c].push(i),
            None => noise.push(i),
        }
    }
    groups.sort();
    (groups, noise)
}

fn dbscan_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=300);
        let eps = rng.random_range(0.02..0.15);
        let min_pts = rng.random_range(1..=10);
        // A few blobs plus uniform background.
        let centers: Vec<Vec3> = (0..rng.random_range(1..6))
            .map(|_| Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.3)))
            .collect();
        let points: Vec<Vec3> = (0..n)
            .map(|_| {
                if rng.random_bool(0.7) {
                    let c = centers[rng.random_range(0..centers.len())];
                    c + Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.05..0.05))
                } else {
                    Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..0.3))
                }
            })
            .collect();
        let a = dbscan(&points, &DbscanParams { eps, min_pts }).unwrap();
        let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        let mut noise = Vec::new();
        for (i, l) in a.labels.iter().enumerate() {
            match l {
                Some(l) => groups.entry(*l).or_default().push(i),
                None => noise.push(i),
            }
        }
        let mut got: Vec<Vec<usize>> = groups.into_values().collect();
        got.sort();
        if (got, noise) != eps_graph_partition(&points, eps, min_pts) {
            mismatches += 1;
        }
    }
    Outcome {
        name: "DBSCAN equals eps-graph components",
        pass: mismatches == 0,
        detail: format!("{} of 200 instances differ", mismatches),
    }
}

/// Minimum cost over all pair-adjacent cyclic tours: segment 0 fixed first
/// and forward, every order and orientation of the rest.
fn exhaustive_tour_cost(segments: &[WallSegment]) -> f64 {
    fn rec(segs: &[WallSegment], seq: &mut Vec<(usize, bool)>, used: &mut [bool], best: &mut f64) {
        if seq.len() == segs.len() {
            *best = best.min(sequence_cost(segs, seq));
            return;
        }
        for s in 1..segs.len() {
            if used[s] {
                continue;
            }
            used[s] = true;
            for rev in [false, true] {
                seq.push((s, rev));
                rec(segs, seq, used, best);
                seq.pop();
            }
            used[s] = false;
        }
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; segments.len()];
    used[0] = true;
    rec(segments, &mut vec![(0, false)], &mut used, &mut best);
    best
}

fn two_opt_optimality(run: &SuiteRun) -> Outcome {
    let (mut rooms, mut worse) = (0, Vec::new());
    for (scene, rec) in run.recs.iter().enumerate() {
        for room in &rec.rooms {
            let d = &room.detail;
            let (Some(tour), n) = (&d.tour, d.segments.len()) else { continue };
            if n > 6 {
                continue;
            }
            rooms += 1;
            let opt = exhaustive_tour_cost(&d.segments);
            let cost = match tour.path.segment_sequence() {
                Some(seq) => sequence_cost(&d.segments, &seq),
                None => f64::INFINITY,
            };
            if cost > opt + 1e-9 * (1.0 + opt) {
                worse.push(format!("scene {scene} room {}: {cost:.6} > {opt:.6}", room.cluster));
            }
        }
    }
    Outcome {
        name: "2-opt optimal on rooms with <= 6 walls",
        pass: worse.is_empty() && rooms > 0,
        detail: if worse.is_empty() {
            format!("{rooms} rooms match the exhaustive optimum")
        } else {
            format!("{} of {rooms} rooms above optimum: {}", worse.len(), worse.join(", "))
        },
    }
}

fn best_time(scene: &Scene, threads: usize, repeat: usize) -> Duration {
    let cfg = PipelineConfig { threads, ..PipelineConfig::default() };
    (0..repeat)
        .map(|_| {
            let t = Instant::now();
            reconstruct(&scene.cloud, &VoteSource::Oracle(NoiseSpec::default()), &cfg).expect("reconstruct");
            t.elapsed()
        })
        .min()
        .unwrap()
}

fn runtime() -> Outcome {
    let scene = scene_with_rooms(10, 0, 200).expect("10-room scene");
    let cfg = PipelineConfig::default();
    let n = scene.cloud.len().min(cfg.n_points);
    let t = best_time(&scene, 1, 3);
    Outcome {
        name: "runtime: 10 rooms single-threaded < 4 s",
        pass: t < Duration::from_secs(4) && n == cfg.n_points,
        detail: format!("{:.3} s on {n} points ({} rooms)", t.as_secs_f64(), scene.plan.rooms.len()),
    }
}

fn speedup() -> Outcome {
    let scene = scene_with_rooms(20, 0, 200).expect("20-room scene");
    let t1 = best_time(&scene, 1, 3);
    let t8 = best_time(&scene, 8, 3);
    let s = t1.as_secs_f64() / t8.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    Outcome {
        name: "speedup 1 -> 8 threads >= 2x (20 rooms)",
        pass: s >= 2.0,
        detail: format!("{:.3} s -> {:.3} s, {s:.2}x on {cores} available core(s)", t1.as_secs_f64(), t8.as_secs_f64()),
    }
}

fn shrunk_square() -> (Floorplan, Floorplan) {
    let sq = |h: f64| {
        SimplePolygon::new(vec![
            Vec2::new(0.5 - h, 0.5 - h),
            Vec2::new(0.5 + h, 0.5 - h),
            Vec2::new(0.5 + h, 0.5 + h),
            Vec2::new(0.5 - h, 0.5 + h),
        ])
        .unwrap()
    };
    (assemble(vec![(0, sq(0.5))], NormalizeFrame::IDENTITY), assemble(vec![(0, sq(0.35))], NormalizeFrame::IDENTITY))
}

fn metrics_self_consistency(scenes: &[Scene]) -> Outcome {
    let cfg = EvalConfig::default();
    let mut imperfect = Vec::new();
    let extra: Vec<Scene> = (1000..1050).map(|s| generate_scene(&SceneSpec::with_seed(s)).unwrap()).collect();
    for (k, scene) in scenes.iter().chain(&extra).enumerate() {
        let gt = gt_to_floorplan(&scene.plan);
        let r = evaluate(&gt, &gt, &cfg).unwrap();
        if r.values() != [1.0; 6] {
            imperfect.push(k);
        }
    }
    let (gt, pred) = shrunk_square();
    let r = evaluate(&gt, &pred, &cfg).unwrap();
    let shrink_ok = r.rooms.tp == 0 && r.rooms.fp == 1 && r.rooms.fn_ == 1;
    Outcome {
        name: "metrics self-consistency",
        pass: imperfect.is_empty() && shrink_ok,
        detail: format!(
            "{} of {} GT plans imperfect against themselves; 70% shrink -> rooms tp {} fp {} fn {}",
            imperfect.len(),
            scenes.len() + extra.len(),
            r.rooms.tp,
            r.rooms.fp,
            r.rooms.fn_
        ),
    }
}

fn determinism(scenes: &[Scene], first: &SuiteRun) -> Outcome {
    let cfg = PipelineConfig { threads: 4, ..PipelineConfig::default() };
    let second = run_suite(scenes, |_| NoiseSpec::default(), &cfg);
    let differing: Vec<usize> = (0..scenes.len())
        .filter(|&k| floorplan_to_json(&first.recs[k].plan) != floorplan_to_json(&second.recs[k].plan))
        .collect();
    Outcome {
        name: "determinism across runs and thread counts",
        pass: differing.is_empty(),
        detail: format!("{} of {} floorplan JSONs differ between 1 and 4 threads", differing.len(), scenes.len()),
    }
}

fn main() -> ExitCode {
    let scenes = suite_scenes();
    let clean = run_suite(&scenes, |_| NoiseSpec::default(), &PipelineConfig::default());
    let (noise, note) = noise_robustness(&scenes);
    let outcomes = [
        zero_noise(&clean),
        noise,
        loss_correctness(),
        dbscan_oracle(),
        two_opt_optimality(&clean),
        runtime(),
        speedup(),
        metrics_self_consistency(&scenes),
        determinism(&scenes, &clean),
    ];
    for o in &outcomes {
        println!("[{}] {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    println!("[info] {note}");
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
