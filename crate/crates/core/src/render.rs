//! SVG rendering of floorplans.

use std::fmt::Write;

use crate::assembly::Floorplan;

const CANVAS: f64 = 800.0;
const MARGIN: f64 = 0.05;

/// Fill color for a room, a fixed function of its id.
pub fn room_color(id: u32) -> String {
    // Golden-angle hue steps keep neighbouring ids apart.
    let hue = (id as f64 * 137.507_764_05) % 360.0;
    format!("hsl({hue:.1},65%,62%)")
}

/// One filled `<path>` per room plus an id label at its vertex mean. Y is
/// flipped so the plan reads with +y up.
pub fn render_svg(plan: &Floorplan) -> String {
    let mut out = String::new();
    let Some((lo, hi)) = plan.bounds() else {
        let _ = write!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {CANVAS} {CANVAS}" width="{CANVAS}" height="{CANVAS}"></svg>"#
        );
        out.push('\n');
        return out;
    };
    let (w, h) = ((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9));
    let (mx, my) = (w * MARGIN, h * MARGIN);
    let (vw, vh) = (w + 2.0 * mx, h + 2.0 * my);
    let stroke = vw.max(vh) * 0.004;
    let font = vw.max(vh) * 0.03;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.6} {:.6} {:.6} {:.6}" width="{CANVAS}" height="{:.0}">"#,
        lo.x - mx,
        -(hi.y + my),
        vw,
        vh,
        CANVAS * vh / vw
    );
    for room in &plan.rooms {
        let corners = room.polygon.corners();
        let mut d = String::new();
        for (k, c) in corners.iter().enumerate() {
            let _ = write!(d, "{}{:.6} {:.6} ", if k == 0 { "M" } else { "L" }, c.x, -c.y);
        }
        d.push('Z');
        let _ = writeln!(
            out,
            r#"  <path d="{d}" fill="{}" fill-opacity="0.8" stroke="black" stroke-width="{stroke:.6}" data-room="{}"/>"#,
            room_color(room.id),
            room.id
        );
        let n = corners.len() as f64;
        let (cx, cy) = corners.iter().fold((0.0, 0.0), |(x, y), c| (x + c.x / n, y + c.y / n));
        let _ = writeln!(
            out,
            r#"  <text x="{cx:.6}" y="{:.6}" font-size="{font:.6}" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            -cy,
            room.id
        );
    }
    out.push_str("</svg>\n");
    out
}
