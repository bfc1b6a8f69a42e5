//! Length-preserving frame transport with snapping to the surface.

use crate::error::{Error, Result};
use crate::geometry::{rotation_between, z_axis, Point2, Point3, UnitVector3, Vector3};
use crate::surface::normals::fit_plane;
use crate::surface::SurfaceModel;

use super::sequence::{Mapped, Note, PointMapper};
use super::stroke::SurfacePoint;

/// Moves from `q` along the 2D segment `from → to` laid into the tangent
/// plane at `q`: the segment vector is rotated by the rotation taking `+z`
/// onto `normal`. The step length equals the 2D segment length.
pub fn transport(q: &Point3, normal: &UnitVector3, from: &Point2, to: &Point2) -> Point3 {
    let step = to - from;
    q + rotation_between(&z_axis(), normal) * Vector3::new(step.x, step.y, 0.0)
}

/// Walks strokes by transport. Each transported pen-down point is snapped
/// either to the nearest sample (`estimate = false`) or onto a plane fitted
/// to the `k` nearest samples (`estimate = true`). Pen-up bridge points
/// always use the plane fit, so the walk between strokes does not pick up
/// sample-spacing drift.
pub struct MetrologyMapper<'a> {
    surface: &'a SurfaceModel,
    start: SurfacePoint,
    estimate: bool,
    k: usize,
}

impl<'a> MetrologyMapper<'a> {
    pub fn new(surface: &'a SurfaceModel, start: SurfacePoint, estimate: bool, k: usize) -> Self {
        MetrologyMapper { surface, start, estimate, k: k.max(3).min(surface.samples().len()) }
    }

    fn left(&self, distance: f64) -> Error {
        Error::LeftSurface { stroke: 0, point: 0, distance, tolerance: self.surface.snap_tolerance() }
    }

    /// Places a transported point back on the surface.
    pub fn snap(&self, p: &Point3, prev_normal: &UnitVector3) -> Result<Mapped> {
        self.snap_with(p, prev_normal, self.estimate)
    }

    fn snap_with(&self, p: &Point3, prev_normal: &UnitVector3, estimate: bool) -> Result<Mapped> {
        let tol = self.surface.snap_tolerance();
        if !estimate {
            let (s, d) = self.surface.index().nearest(p)?;
            if d > tol {
                return Err(self.left(d));
            }
            return Ok(SurfacePoint { position: s.position, normal: s.normal }.into());
        }
        let hood = self.surface.index().k_nearest(p, self.k)?;
        let (nearest, d) = hood[0];
        if d > tol {
            return Err(self.left(d));
        }
        let points: Vec<Point3> = hood.iter().map(|(s, _)| s.position).collect();
        match fit_plane(&points) {
            Some(fit) => {
                let normal = if fit.normal.dot(prev_normal) < 0.0 { -fit.normal } else { fit.normal };
                Ok(SurfacePoint { position: fit.project(p), normal }.into())
            }
            None => Ok(Mapped {
                point: SurfacePoint { position: nearest.position, normal: nearest.normal },
                note: Some(Note::PlaneFitFallback),
            }),
        }
    }
}

impl PointMapper for MetrologyMapper<'_> {
    fn is_stateless(&self) -> bool {
        false
    }

    fn map_first(&self, _p: &Point2) -> Result<Mapped> {
        Ok(self.start.into())
    }

    fn map_next(&self, from: &Point2, to: &Point2, prev: &SurfacePoint) -> Result<Mapped> {
        let moved = transport(&prev.position, &prev.normal, from, to);
        self.snap(&moved, &prev.normal)
    }

    fn map_bridge(&self, from: &Point2, to: &Point2, prev: &SurfacePoint) -> Result<Mapped> {
        let moved = transport(&prev.position, &prev.normal, from, to);
        self.snap_with(&moved, &prev.normal, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::sequence::sequence_strokes;
    use crate::mapping::stroke::{lattice, Box2};
    use crate::surface::generators;

    #[test]
    fn transport_on_flat_frame_is_translation() {
        let q = transport(&Point3::new(1.0, 2.0, 3.0), &z_axis(), &Point2::new(0.0, 0.0), &Point2::new(0.5, -2.0));
        assert_eq!(q, Point3::new(1.5, 0.0, 3.0));
    }

    #[test]
    fn transport_follows_tilted_tangent() {
        // normal tilted about y: 2D x goes into the tangent (cos, 0, -sin)
        let t: f64 = 0.4;
        let n = UnitVector3::new_normalize(Vector3::new(t.sin(), 0.0, t.cos()));
        let q = transport(&Point3::origin(), &n, &Point2::origin(), &Point2::new(2.0, 0.0));
        assert!((q.coords - Vector3::new(2.0 * t.cos(), 0.0, -2.0 * t.sin())).norm() < 1e-12);
        assert!(q.coords.dot(&n).abs() < 1e-12);
    }

    #[test]
    fn plane_reproduced_exactly() {
        let s = SurfaceModel::from_mesh(generators::plane_grid(30.0, 30.0, 1.0).unwrap(), 2000, 3).unwrap();
        let set = lattice(Box2::centered(20.0, 20.0), 3, 3, 21).unwrap();
        let start = SurfacePoint { position: Point3::new(-10.0, -10.0, 0.0), normal: z_axis() };
        for estimate in [false, true] {
            let m = MetrologyMapper::new(&s, start, estimate, 10);
            let (out, _) = sequence_strokes(&set, &m).unwrap();
            for (a, b) in set.strokes().iter().zip(&out) {
                for (p, q) in a.points.iter().zip(b.pen_down()) {
                    assert!((q.position - Point3::new(p.x, p.y, 0.0)).norm() < 1e-9, "{estimate} {p} {}", q.position);
                }
            }
        }
    }

    #[test]
    fn leaving_the_surface_is_reported() {
        let s = SurfaceModel::from_mesh(generators::plane_grid(10.0, 10.0, 1.0).unwrap(), 500, 3).unwrap();
        // one 15 mm step from the center lands 10 mm past the edge
        let set = lattice(Box2::new(Point2::new(0.0, 0.0), Point2::new(15.0, 0.0)), 1, 0, 2).unwrap();
        let start = SurfacePoint { position: Point3::new(0.0, 0.0, 0.0), normal: z_axis() };
        let m = MetrologyMapper::new(&s, start, false, 10);
        match sequence_strokes(&set, &m) {
            Err(Error::LeftSurface { stroke: 0, point: 1, distance, .. }) => assert!((distance - 10.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn collinear_neighbors_fall_back() {
        let pts: Vec<Point3> = (0..40).map(|i| Point3::new(i as f64 * 0.5, 0.0, 0.0)).collect();
        let s = SurfaceModel::from_point_cloud(&pts, &vec![z_axis(); pts.len()]).unwrap();
        let start = SurfacePoint { position: pts[0], normal: z_axis() };
        let m = MetrologyMapper::new(&s, start, true, 5);
        let r = m.map_next(&Point2::origin(), &Point2::new(1.0, 0.0), &start).unwrap();
        assert_eq!(r.note, Some(Note::PlaneFitFallback));
        assert_eq!(r.point.position, Point3::new(1.0, 0.0, 0.0));
    }
}
