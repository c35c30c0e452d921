use crate::geom::CellGrid;

/// A room footprint drawn from a 3×3 binary kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeKernel {
    /// `bits[row][col]`.
    pub bits: [[bool; 3]; 3],
}

impl ShapeKernel {
    pub fn from_mask(mask: u16) -> Self {
        let mut bits = [[false; 3]; 3];
        for (k, bit) in bits.iter_mut().flatten().enumerate() {
            *bit = mask & (1 << k) != 0;
        }
        Self { bits }
    }

    pub fn mask(&self) -> u16 {
        self.bits
            .iter()
            .flatten()
            .enumerate()
            .fold(0, |m, (k, &b)| m | ((b as u16) << k))
    }

    /// Set cells as `(col, row)` offsets.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..3).flat_map(move |r| (0..3).filter(move |&c| self.bits[r][c]).map(move |c| (c, r)))
    }

    pub fn len(&self) -> usize {
        self.cells().count()
    }

    pub fn is_empty(&self) -> bool {
        self.mask() == 0
    }

    fn grid(&self) -> CellGrid {
        CellGrid::from_fn(3, 3, |c, r| self.bits[r][c])
    }

    pub fn is_four_connected(&self) -> bool {
        !self.is_empty() && self.grid().set_components().len() == 1
    }

    /// Corners of the shape's outline.
    pub fn corner_count(&self) -> usize {
        crate::geom::trace_outline(&self.grid()).map_or(0, |r| r.len())
    }

    fn touches_origin(&self) -> bool {
        self.bits[0].iter().any(|&b| b) && self.bits.iter().any(|row| row[0])
    }
}

/// Every non-empty, 4-connected, hole-free 3×3 pattern, one per translation
/// class (shifted to touch row 0 and column 0), ordered by bit mask.
pub fn build_shape_library() -> Vec<ShapeKernel> {
    (1u16..512)
        .map(ShapeKernel::from_mask)
        .filter(|k| k.touches_origin() && k.grid().is_simple_region())
        .collect()
}
