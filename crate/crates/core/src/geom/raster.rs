use super::{GeomError, SimplePolygon, Vec2};

/// World-to-grid map `grid = scale * world + translate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridTransform {
    pub scale: f64,
    pub translate: Vec2,
}

impl GridTransform {
    pub fn new(scale: f64, translate: Vec2) -> Result<Self, GeomError> {
        if !(scale.is_finite() && scale > 0.0) || !translate.is_finite() {
            return Err(GeomError::DegenerateInput("grid transform must be invertible"));
        }
        Ok(Self { scale, translate })
    }

    /// Uniform transform placing the box `lo..hi` inside `[margin, cells - margin]²`,
    /// centered along the shorter side.
    pub fn fit_box(lo: Vec2, hi: Vec2, cells: usize, margin: f64) -> Result<Self, GeomError> {
        let usable = cells as f64 - 2.0 * margin;
        let extent = (hi.x - lo.x).max(hi.y - lo.y);
        if !(usable > 0.0) || !(extent > 0.0) {
            return Err(GeomError::DegenerateInput("empty box or grid"));
        }
        let scale = usable / extent;
        let pad = Vec2::new(
            margin + 0.5 * (usable - scale * (hi.x - lo.x)),
            margin + 0.5 * (usable - scale * (hi.y - lo.y)),
        );
        Self::new(scale, pad - lo * scale)
    }

    pub fn apply(&self, p: Vec2) -> Vec2 {
        p * self.scale + self.translate
    }

    pub fn invert(&self, g: Vec2) -> Vec2 {
        (g - self.translate) / self.scale
    }
}

/// Boolean occupancy grid; cell `(i, j)` covers `[i, i+1) × [j, j+1)` in grid
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterMask {
    pub width: usize,
    pub height: usize,
    pub transform: GridTransform,
    cells: Vec<bool>,
}

impl RasterMask {
    pub fn empty(width: usize, height: usize, transform: GridTransform) -> Result<Self, GeomError> {
        if width == 0 || height == 0 {
            return Err(GeomError::DegenerateInput("raster needs at least one cell"));
        }
        Ok(Self { width, height, transform, cells: vec![false; width * height] })
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.cells[j * self.width + i] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    fn same_frame(&self, other: &RasterMask) -> bool {
        self.width == other.width && self.height == other.height && self.transform == other.transform
    }

    /// Sets every cell whose center lies inside the ring (even-odd rule).
    /// Ring coordinates are in world units.
    pub fn fill_ring(&mut self, ring: &[Vec2]) -> Result<(), GeomError> {
        let g: Vec<Vec2> = ring.iter().map(|&p| self.transform.apply(p)).collect();
        let tol = 1e-9;
        if g.iter().any(|p| {
            !p.is_finite()
                || p.x < -tol
                || p.y < -tol
                || p.x > self.width as f64 + tol
                || p.y > self.height as f64 + tol
        }) {
            return Err(GeomError::OutOfBounds);
        }
        let n = g.len();
        let mut xs = Vec::new();
        for j in 0..self.height {
            let yc = j as f64 + 0.5;
            xs.clear();
            for k in 0..n {
                let (a, b) = (g[k], g[(k + 1) % n]);
                if (a.y <= yc) != (b.y <= yc) {
                    xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
                }
            }
            xs.sort_by(f64::total_cmp);
            for pair in xs.chunks_exact(2) {
                let first = ((pair[0] - 0.5).ceil().max(0.0)) as usize;
                let end = (((pair[1] - 0.5).ceil()).max(0.0) as usize).min(self.width);
                for i in first..end {
                    self.cells[j * self.width + i] = true;
                }
            }
        }
        Ok(())
    }
}

/// Rasterizes `p` onto a grid of the given size and transform.
pub fn rasterize(
    p: &SimplePolygon,
    width: usize,
    height: usize,
    transform: GridTransform,
) -> Result<RasterMask, GeomError> {
    let mut m = RasterMask::empty(width, height, transform)?;
    m.fill_ring(p.corners())?;
    Ok(m)
}

/// Intersection over union of two masks in the same frame; 0 when both are empty.
pub fn mask_iou(a: &RasterMask, b: &RasterMask) -> Result<f64, GeomError> {
    if !a.same_frame(b) {
        return Err(GeomError::DimMismatch);
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.cells.iter().zip(&b.cells) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}
