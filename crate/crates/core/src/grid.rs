//! Uniform bucket grid over 2D boxes, for point location.

use crate::geometry::Point2;

#[derive(Debug, Clone)]
pub struct BucketGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl BucketGrid {
    /// Buckets each item's box `(min, max)` into every cell it overlaps.
    /// `cell_hint` is the preferred cell size; it grows if the grid would
    /// have far more cells than items.
    pub fn new(boxes: &[(Point2, Point2)], cell_hint: f64) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (a, b) in boxes {
            lo = lo.inf(a);
            hi = hi.sup(b);
        }
        if boxes.is_empty() {
            lo = Point2::origin();
            hi = Point2::origin();
        }
        let (w, h) = ((hi.x - lo.x).max(1e-12), (hi.y - lo.y).max(1e-12));
        let budget = 4 * boxes.len() + 16;
        let mut cell = if cell_hint > 0.0 && cell_hint.is_finite() { cell_hint } else { w.max(h) };
        while ((w / cell).ceil() * (h / cell).ceil()) as usize > budget {
            cell *= 1.5;
        }
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut grid = BucketGrid { origin: lo, cell, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for (i, (a, b)) in boxes.iter().enumerate() {
            let (i0, j0) = grid.clamped(a);
            let (i1, j1) = grid.clamped(b);
            for j in j0..=j1 {
                for c in i0..=i1 {
                    grid.cells[j * nx + c].push(i as u32);
                }
            }
        }
        grid
    }

    fn clamped(&self, p: &Point2) -> (usize, usize) {
        let fx = ((p.x - self.origin.x) / self.cell).floor();
        let fy = ((p.y - self.origin.y) / self.cell).floor();
        (fx.clamp(0.0, (self.nx - 1) as f64) as usize, fy.clamp(0.0, (self.ny - 1) as f64) as usize)
    }

    /// Items whose box may contain `p`, in insertion order.
    pub fn candidates(&self, p: &Point2) -> &[u32] {
        let tol = 1e-9 * self.cell;
        let fx = (p.x - self.origin.x) / self.cell;
        let fy = (p.y - self.origin.y) / self.cell;
        if fx < -tol || fy < -tol || fx > self.nx as f64 + tol || fy > self.ny as f64 + tol {
            return &[];
        }
        let (i, j) = self.clamped(p);
        &self.cells[j * self.nx + i]
    }

    /// Items whose box may intersect the square of half-width `r` around `p`,
    /// in ascending order without repeats.
    pub fn candidates_near(&self, p: &Point2, r: f64) -> Vec<u32> {
        let (i0, j0) = self.clamped(&Point2::new(p.x - r, p.y - r));
        let (i1, j1) = self.clamped(&Point2::new(p.x + r, p.y + r));
        let mut out = Vec::new();
        for j in j0..=j1 {
            for i in i0..=i1 {
                out.extend_from_slice(&self.cells[j * self.nx + i]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}
