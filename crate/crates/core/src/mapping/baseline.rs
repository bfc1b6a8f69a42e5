//! Orthogonal projection along a fixed direction.

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, UnitVector3, Vector3};
use crate::grid::BucketGrid;
use crate::surface::{SurfaceModel, TriangleMesh, SNAP_SPACING_FACTOR};

use super::sequence::{Mapped, Note, PointMapper};
use super::stroke::SurfacePoint;

/// Orthonormal pair spanning the plane perpendicular to `d`.
fn perpendicular_basis(d: &UnitVector3) -> (Vector3, Vector3) {
    let helper = if d.x.abs() <= d.y.abs() && d.x.abs() <= d.z.abs() {
        Vector3::x()
    } else if d.y.abs() <= d.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let e1 = d.cross(&helper).normalize();
    let e2 = d.cross(&e1);
    (e1, e2)
}

enum Target<'a> {
    Mesh { mesh: &'a TriangleMesh, grid: BucketGrid },
    Points { grid: BucketGrid },
}

/// Casts each 2D point `(x, y)` as the line through `(x, y, 0)` along
/// `direction` and takes the first surface crossing coming from upstream.
/// Meshes are intersected exactly. For point clouds, samples within the
/// gating radius of the line are candidates; among those within one mean
/// spacing of the frontmost, the one closest to the line wins.
pub struct BaselineMapper<'a> {
    surface: &'a SurfaceModel,
    direction: UnitVector3,
    basis: (Vector3, Vector3),
    target: Target<'a>,
}

impl<'a> BaselineMapper<'a> {
    pub fn new(surface: &'a SurfaceModel, direction: UnitVector3) -> Result<Self> {
        if surface.samples().is_empty() {
            return Err(Error::EmptySurface);
        }
        let basis = perpendicular_basis(&direction);
        let project = |p: &Point3| Point2::new(p.coords.dot(&basis.0), p.coords.dot(&basis.1));
        let target = match surface.mesh() {
            Some(mesh) => {
                let boxes: Vec<(Point2, Point2)> = mesh
                    .faces()
                    .iter()
                    .map(|f| {
                        let q = f.map(|v| project(&mesh.vertices()[v]));
                        (q[0].inf(&q[1]).inf(&q[2]), q[0].sup(&q[1]).sup(&q[2]))
                    })
                    .collect();
                let area: f64 = boxes.iter().map(|(a, b)| (b.x - a.x) * (b.y - a.y)).sum::<f64>() / boxes.len() as f64;
                Target::Mesh { mesh, grid: BucketGrid::new(&boxes, area.sqrt().max(1e-9)) }
            }
            None => {
                let boxes: Vec<(Point2, Point2)> = surface
                    .samples()
                    .iter()
                    .map(|s| {
                        let q = project(&s.position);
                        (q, q)
                    })
                    .collect();
                Target::Points { grid: BucketGrid::new(&boxes, surface.snap_tolerance()) }
            }
        };
        Ok(BaselineMapper { surface, direction, basis, target })
    }

    fn origin(p: &Point2) -> Point3 {
        Point3::new(p.x, p.y, 0.0)
    }

    /// Surface point hit by the projection of `p`.
    pub fn project(&self, p: &Point2) -> Result<SurfacePoint> {
        let o = Self::origin(p);
        let d = self.direction.into_inner();
        let key = Point2::new(o.coords.dot(&self.basis.0), o.coords.dot(&self.basis.1));
        let miss = Error::ProjectionMiss { stroke: 0, point: 0 };
        match &self.target {
            Target::Mesh { mesh, grid } => {
                let mut best: Option<(f64, usize)> = None;
                for &f in grid.candidates(&key) {
                    let f = f as usize;
                    let [a, b, c] = mesh.triangle(f);
                    if let Some(t) = line_triangle(&o, &d, &a, &b, &c) {
                        if best.is_none_or(|(bt, _)| t < bt) {
                            best = Some((t, f));
                        }
                    }
                }
                let (t, f) = best.ok_or(miss)?;
                Ok(SurfacePoint { position: o + d * t, normal: mesh.face_normals()[f] })
            }
            Target::Points { grid } => {
                let tol = self.surface.snap_tolerance();
                let layer = tol / SNAP_SPACING_FACTOR;
                let samples = self.surface.samples();
                let hits: Vec<(usize, f64, f64)> = grid
                    .candidates_near(&key, tol)
                    .into_iter()
                    .filter_map(|i| {
                        let s = &samples[i as usize];
                        let v = s.position - o;
                        let t = v.dot(&d);
                        let perp = (v - d * t).norm();
                        (perp <= tol).then_some((i as usize, t, perp))
                    })
                    .collect();
                let t_front = hits.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
                let (i, _, _) = hits
                    .into_iter()
                    .filter(|h| h.1 <= t_front + layer)
                    .min_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)))
                    .ok_or(miss)?;
                Ok(SurfacePoint { position: samples[i].position, normal: samples[i].normal })
            }
        }
    }
}

/// Parameter `t` where the line `o + t d` crosses triangle `abc`, edges
/// included.
fn line_triangle(o: &Point3, d: &Vector3, a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = b - a;
    let e2 = c - a;
    let h = d.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < EPS * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = inv * s.dot(&h);
    let q = s.cross(&e1);
    let v = inv * d.dot(&q);
    if u < -1e-12 || v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    Some(inv * e2.dot(&q))
}

impl PointMapper for BaselineMapper<'_> {
    fn is_stateless(&self) -> bool {
        true
    }

    fn map_first(&self, p: &Point2) -> Result<Mapped> {
        let point = self.project(p)?;
        let note = (point.normal.dot(&self.direction) >= 0.0).then_some(Note::BackFacing);
        Ok(Mapped { point, note })
    }

    fn map_next(&self, _from: &Point2, to: &Point2, _prev: &SurfacePoint) -> Result<Mapped> {
        self.map_first(to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::z_axis;
    use crate::surface::generators;

    fn down() -> UnitVector3 {
        -z_axis()
    }

    #[test]
    fn plane_is_identity() {
        let s = SurfaceModel::from_mesh(generators::plane_grid(20.0, 20.0, 1.0).unwrap(), 100, 0).unwrap();
        let m = BaselineMapper::new(&s, down()).unwrap();
        for p in [Point2::new(0.3, -4.7), Point2::new(-10.0, 10.0), Point2::new(2.0, 3.0)] {
            let q = m.project(&p).unwrap();
            assert!((q.position - Point3::new(p.x, p.y, 0.0)).norm() < 1e-12);
            assert_eq!(q.normal, z_axis());
        }
        assert!(matches!(m.project(&Point2::new(10.5, 0.0)), Err(Error::ProjectionMiss { .. })));
    }

    #[test]
    fn cylinder_top_hit() {
        let s = SurfaceModel::from_mesh(generators::half_cylinder(50.0, 100.0, 180, 2).unwrap(), 100, 0).unwrap();
        let m = BaselineMapper::new(&s, down()).unwrap();
        let q = m.project(&Point2::new(30.0, 10.0)).unwrap();
        // the faceted surface lies within the sagitta of the true circle
        assert!((q.position.coords.xz().norm() - 50.0).abs() < 2e-3);
        assert!((q.position.x - 30.0).abs() < 1e-12 && (q.position.y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn closed_box_takes_first_hit() {
        let s = SurfaceModel::from_mesh(generators::box_mesh(10.0, 10.0, 10.0, false).unwrap(), 100, 0).unwrap();
        let m = BaselineMapper::new(&s, down()).unwrap();
        let hit = m.map_first(&Point2::new(1.0, 2.0)).unwrap();
        assert!((hit.point.position.z - 10.0).abs() < 1e-12);
        assert_eq!(hit.note, None);
        // from below, the first crossing is the bottom face
        let m = BaselineMapper::new(&s, z_axis()).unwrap();
        assert!(m.project(&Point2::new(1.0, 2.0)).unwrap().position.z.abs() < 1e-12);
    }

    #[test]
    fn steep_normals_flagged() {
        // a mesh whose only face under the point leans past vertical
        let mesh = TriangleMesh::new(
            vec![Point3::new(-1.0, -1.0, 0.0), Point3::new(1.0, -1.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 2, 1]],
        )
        .unwrap();
        let s = SurfaceModel::from_mesh(mesh, 50, 0).unwrap();
        let m = BaselineMapper::new(&s, down()).unwrap();
        let hit = m.map_first(&Point2::new(0.0, 0.0)).unwrap();
        assert_eq!(hit.note, Some(Note::BackFacing));
    }

    #[test]
    fn point_cloud_front_layer() {
        // two stacked sheets: the upper one wins
        let mut pts = Vec::new();
        for i in 0..21 {
            for j in 0..21 {
                pts.push(Point3::new(i as f64 - 10.0, j as f64 - 10.0, 0.0));
                pts.push(Point3::new(i as f64 - 10.0, j as f64 - 10.0, 5.0));
            }
        }
        let normals = vec![z_axis(); pts.len()];
        let s = SurfaceModel::from_point_cloud(&pts, &normals).unwrap();
        let m = BaselineMapper::new(&s, down()).unwrap();
        let q = m.project(&Point2::new(2.2, -3.1)).unwrap();
        assert_eq!(q.position, Point3::new(2.0, -3.0, 5.0));
        assert!(m.project(&Point2::new(40.0, 0.0)).is_err());
    }
}
