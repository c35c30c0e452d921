use planforge::assembly::{assemble, rasterize_rooms, resolve_overlaps, Floorplan};
use planforge::geom::{NormalizeFrame, SimplePolygon, Vec2, Vec3};

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> SimplePolygon {
    SimplePolygon::new(vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)]).unwrap()
}

fn corners_close(a: &SimplePolygon, b: &SimplePolygon, tol: f64) -> bool {
    a.len() == b.len() && a.corners().iter().all(|p| b.corners().iter().any(|q| p.dist(*q) <= tol))
}

#[test]
fn empty_plan_is_valid() {
    let plan = assemble(Vec::new(), NormalizeFrame::IDENTITY);
    assert!(plan.is_empty());
    assert!(plan.bounds().is_none());
    assert_eq!(resolve_overlaps(&plan, 256), plan);
}

#[test]
fn disjoint_rooms_are_kept_in_id_order() {
    let rooms = vec![(2, rect(1.2, 0.0, 2.0, 1.0)), (0, rect(0.0, 0.0, 1.0, 1.0)), (1, rect(0.0, 1.2, 1.0, 2.0))];
    let plan = assemble(rooms, NormalizeFrame::IDENTITY);
    assert_eq!(plan.rooms.iter().map(|r| r.id).collect::<Vec<_>>(), vec![0, 1, 2]);
    let resolved = resolve_overlaps(&plan, 256);
    assert_eq!(resolved, plan);
}

#[test]
fn transform_roundtrip() {
    let cloud = [Vec3::new(10.0, -4.0, 1.0), Vec3::new(18.0, 2.0, 3.5)];
    let frame = NormalizeFrame::fit(&cloud).unwrap();
    let input = rect(11.0, -3.0, 14.5, 1.25);
    let normalized = input.map(|p| frame.apply2(p)).unwrap();
    let plan = assemble(vec![(0, normalized)], frame).to_input_frame().unwrap();
    for (a, b) in plan.rooms[0].polygon.corners().iter().zip(input.corners()) {
        assert!(a.dist(*b) < 1e-9);
    }
    assert_eq!(plan.frame, NormalizeFrame::IDENTITY);
}

#[test]
fn touching_rooms_are_not_contested() {
    let plan = assemble(vec![(0, rect(0.0, 0.0, 1.0, 1.0)), (1, rect(1.0, 0.0, 2.0, 1.0))], NormalizeFrame::IDENTITY);
    assert_eq!(resolve_overlaps(&plan, 256), plan);
}

#[test]
fn nested_square_keeps_its_region() {
    let big = rect(0.0, 0.0, 2.0, 2.0);
    let small = rect(0.5, 0.5, 1.0, 1.0);
    let plan = assemble(vec![(0, big), (1, small.clone())], NormalizeFrame::IDENTITY);
    let out = resolve_overlaps(&plan, 256);
    let cell = 2.0 / 252.0;
    let small_out = &out.rooms.iter().find(|r| r.id == 1).unwrap().polygon;
    assert!(corners_close(small_out, &small, 1.5 * cell));
    // The big room loses the small room's area. Its largest hole-free part
    // is what remains, so its area is at most 4 - 0.25.
    if let Some(big_out) = out.rooms.iter().find(|r| r.id == 0) {
        assert!(big_out.polygon.area() <= 4.0 - 0.25 + 4.0 * cell);
    }
    let masks = rasterize_rooms(&out, 256).unwrap();
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let shared = masks[i].cells().iter().zip(masks[j].cells()).filter(|(a, b)| **a && **b).count();
            assert_eq!(shared, 0, "rooms {i} and {j} overlap");
        }
    }
}

#[test]
fn identical_rooms_tie_to_lower_id() {
    let sq = rect(0.0, 0.0, 1.0, 1.0);
    let plan = assemble(vec![(3, sq.clone()), (7, sq.clone())], NormalizeFrame::IDENTITY);
    let out = resolve_overlaps(&plan, 256);
    assert_eq!(out.rooms.len(), 1);
    assert_eq!(out.rooms[0].id, 3);
    assert!(corners_close(&out.rooms[0].polygon, &sq, 2.0 / 252.0));
}

#[test]
fn resolution_is_idempotent() {
    let plan = assemble(
        vec![(0, rect(0.0, 0.0, 1.2, 1.0)), (1, rect(1.0, 0.0, 2.0, 1.0)), (2, rect(0.0, 0.9, 2.0, 2.0))],
        NormalizeFrame::IDENTITY,
    );
    let once = resolve_overlaps(&plan, 256);
    let twice = resolve_overlaps(&once, 256);
    assert_eq!(once, twice);
    assert_eq!(Floorplan { rooms: once.rooms.clone(), frame: once.frame }, once);
}
