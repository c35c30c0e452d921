//! Cell-region boundary tracing and cleanup for raster-to-polygon conversion.

use std::collections::{HashMap, VecDeque};

/// Boolean cell grid addressed by `(column, row)`; out-of-range reads are empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellGrid {
    pub width: usize,
    pub height: usize,
    cells: Vec<bool>,
}

impl CellGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut g = Self::new(width, height);
        for j in 0..height {
            for i in 0..width {
                g.cells[j * width + i] = f(i, j);
            }
        }
        g
    }

    pub fn get(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.width
            && (j as usize) < self.height
            && self.cells[j as usize * self.width + i as usize]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.cells[j * self.width + i] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    fn components(&self, value: bool, padded: bool) -> Vec<Vec<(i64, i64)>> {
        // With `padded`, the grid is surrounded by one ring of empty cells so
        // that the exterior forms a single component.
        let pad = padded as i64;
        let (w, h) = (self.width as i64 + 2 * pad, self.height as i64 + 2 * pad);
        let mut seen = vec![false; (w * h) as usize];
        let mut out = Vec::new();
        for j0 in 0..h {
            for i0 in 0..w {
                let idx = (j0 * w + i0) as usize;
                if seen[idx] || self.get(i0 - pad, j0 - pad) != value {
                    continue;
                }
                seen[idx] = true;
                let mut comp = Vec::new();
                let mut queue = VecDeque::from([(i0, j0)]);
                while let Some((i, j)) = queue.pop_front() {
                    comp.push((i - pad, j - pad));
                    for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                        let (ni, nj) = (i + di, j + dj);
                        if ni < 0 || nj < 0 || ni >= w || nj >= h {
                            continue;
                        }
                        let nidx = (nj * w + ni) as usize;
                        if !seen[nidx] && self.get(ni - pad, nj - pad) == value {
                            seen[nidx] = true;
                            queue.push_back((ni, nj));
                        }
                    }
                }
                out.push(comp);
            }
        }
        out
    }

    /// 4-connected components of set cells, in scan order of their first cell.
    pub fn set_components(&self) -> Vec<Vec<(i64, i64)>> {
        self.components(true, false)
    }

    fn keep_only(&self, cells: &[(i64, i64)]) -> CellGrid {
        let mut g = CellGrid::new(self.width, self.height);
        for &(i, j) in cells {
            g.set(i as usize, j as usize, true);
        }
        g
    }

    /// Largest 4-connected component (ties to the earliest in scan order).
    pub fn largest_component(&self) -> CellGrid {
        let comps = self.set_components();
        let best = comps
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)));
        match best {
            Some((_, c)) => self.keep_only(c),
            None => CellGrid::new(self.width, self.height),
        }
    }

    /// A set cell at a vertex where the region touches itself only diagonally.
    fn first_pinch(&self) -> Option<(i64, i64)> {
        for j in 0..=self.height as i64 {
            for i in 0..=self.width as i64 {
                let bl = self.get(i - 1, j - 1);
                let br = self.get(i, j - 1);
                let tl = self.get(i - 1, j);
                let tr = self.get(i, j);
                if bl && tr && !br && !tl {
                    return Some((i, j));
                }
                if br && tl && !bl && !tr {
                    return Some((i - 1, j));
                }
            }
        }
        None
    }

    /// True when the set cells form one 4-connected region without holes
    /// or diagonal pinches, i.e. its outline is a simple polygon.
    pub fn is_simple_region(&self) -> bool {
        self.set_components().len() == 1
            && self.first_pinch().is_none()
            && self.components(false, true).len() == 1
    }

    /// Shrinks the region until it is simple: keeps the largest component,
    /// removes cells at diagonal pinches and cuts channels into holes. Only
    /// ever clears cells.
    pub fn simplified(&self) -> CellGrid {
        let mut g = self.largest_component();
        loop {
            if g.count() == 0 {
                return g;
            }
            if let Some((i, j)) = g.first_pinch() {
                g.set(i as usize, j as usize, false);
                g = g.largest_component();
                continue;
            }
            let empties = g.components(false, true);
            if empties.len() > 1 {
                // First component is the padded exterior; open the next hole
                // upward until reaching a cell that is not set.
                let hole = &empties[1];
                let &(hi, hj) = hole.iter().max_by_key(|&&(i, j)| (j, -i)).expect("non-empty hole");
                let mut j = hj + 1;
                while g.get(hi, j) {
                    g.set(hi as usize, j as usize, false);
                    j += 1;
                }
                g = g.largest_component();
                continue;
            }
            return g;
        }
    }
}

/// Traces the outer boundary of a simple cell region as a counter-clockwise
/// ring of grid vertices with collinear vertices removed. Returns `None` for
/// an empty grid.
pub fn trace_outline(grid: &CellGrid) -> Option<Vec<(i64, i64)>> {
    type V = (i64, i64);
    let mut out: HashMap<V, Vec<V>> = HashMap::new();
    for j in 0..grid.height as i64 {
        for i in 0..grid.width as i64 {
            if !grid.get(i, j) {
                continue;
            }
            if !grid.get(i, j - 1) {
                out.entry((i, j)).or_default().push((i + 1, j));
            }
            if !grid.get(i + 1, j) {
                out.entry((i + 1, j)).or_default().push((i + 1, j + 1));
            }
            if !grid.get(i, j + 1) {
                out.entry((i + 1, j + 1)).or_default().push((i, j + 1));
            }
            if !grid.get(i - 1, j) {
                out.entry((i, j + 1)).or_default().push((i, j));
            }
        }
    }
    if out.is_empty() {
        return None;
    }
    let mut starts: Vec<V> = out.keys().copied().collect();
    starts.sort_unstable_by_key(|&(i, j)| (j, i));

    let mut loops: Vec<Vec<V>> = Vec::new();
    for s in starts {
        while out.get(&s).is_some_and(|v| !v.is_empty()) {
            let mut ring = vec![s];
            let mut prev_dir: Option<V> = None;
            let mut cur = s;
            loop {
                let outs = out.get_mut(&cur).expect("closed boundary");
                let pick = match (prev_dir, outs.len()) {
                    (_, 1) | (None, _) => 0,
                    (Some(d), _) => {
                        // Prefer the leftmost turn so the loop hugs the current cell.
                        let left = (-d.1, d.0);
                        outs.iter()
                            .position(|&n| (n.0 - cur.0, n.1 - cur.1) == left)
                            .unwrap_or(0)
                    }
                };
                let next = outs.swap_remove(pick);
                prev_dir = Some((next.0 - cur.0, next.1 - cur.1));
                cur = next;
                if cur == s {
                    break;
                }
                ring.push(cur);
            }
            loops.push(ring);
        }
    }

    let area2 = |r: &Vec<V>| -> i64 {
        let n = r.len();
        (0..n).map(|k| r[k].0 * r[(k + 1) % n].1 - r[(k + 1) % n].0 * r[k].1).sum()
    };
    let ring = loops.into_iter().max_by_key(area2)?;
    Some(drop_collinear_grid(&ring))
}

fn drop_collinear_grid(ring: &[(i64, i64)]) -> Vec<(i64, i64)> {
    let n = ring.len();
    (0..n)
        .filter(|&k| {
            let p = ring[(k + n - 1) % n];
            let c = ring[k];
            let q = ring[(k + 1) % n];
            (c.0 - p.0) * (q.1 - c.1) - (c.1 - p.1) * (q.0 - c.0) != 0
        })
        .map(|k| ring[k])
        .collect()
}
