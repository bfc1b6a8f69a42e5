//! Analytic test surfaces, triangulated.

use std::f64::consts::PI;

use super::mesh::TriangleMesh;
use crate::error::Result;
use crate::geometry::Point3;

/// Flat grid in `z = 0` centered on the origin, normals `+z`.
pub fn plane_grid(width: f64, height: f64, spacing: f64) -> Result<TriangleMesh> {
    let nx = (width / spacing).round().max(1.0) as usize;
    let ny = (height / spacing).round().max(1.0) as usize;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(
                -0.5 * width + width * i as f64 / nx as f64,
                -0.5 * height + height * j as f64 / ny as f64,
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Axis-aligned box `[-sx/2, sx/2] × [-sy/2, sy/2] × [0, sz]` with outward
/// normals. `open_bottom` drops the `z = 0` face, leaving a disc.
pub fn box_mesh(sx: f64, sy: f64, sz: f64, open_bottom: bool) -> Result<TriangleMesh> {
    let (hx, hy) = (0.5 * sx, 0.5 * sy);
    let vertices = vec![
        Point3::new(-hx, -hy, 0.0),
        Point3::new(hx, -hy, 0.0),
        Point3::new(hx, hy, 0.0),
        Point3::new(-hx, hy, 0.0),
        Point3::new(-hx, -hy, sz),
        Point3::new(hx, -hy, sz),
        Point3::new(hx, hy, sz),
        Point3::new(-hx, hy, sz),
    ];
    let mut faces = vec![
        [4, 5, 6],
        [4, 6, 7], // top
        [0, 1, 5],
        [0, 5, 4], // -y
        [1, 2, 6],
        [1, 6, 5], // +x
        [2, 3, 7],
        [2, 7, 6], // +y
        [3, 0, 4],
        [3, 4, 7], // -x
    ];
    if !open_bottom {
        faces.push([0, 2, 1]);
        faces.push([0, 3, 2]);
    }
    TriangleMesh::new(vertices, faces)
}

/// Upper half of a cylinder with its axis along `y`: `x = r cos θ`,
/// `z = r sin θ`, `θ ∈ [0, π]`, `y ∈ [-length/2, length/2]`. Open shell
/// (disc topology) with outward normals.
pub fn half_cylinder(radius: f64, length: f64, arc_vertices: usize, rings: usize) -> Result<TriangleMesh> {
    let n = arc_vertices.max(2);
    let m = rings.max(2);
    let mut vertices = Vec::with_capacity(n * m);
    for j in 0..m {
        let y = -0.5 * length + length * j as f64 / (m - 1) as f64;
        for i in 0..n {
            let t = PI * i as f64 / (n - 1) as f64;
            vertices.push(Point3::new(radius * t.cos(), y, radius * t.sin()));
        }
    }
    let id = |i: usize, j: usize| j * n + i;
    let mut faces = Vec::with_capacity(2 * (n - 1) * (m - 1));
    for j in 0..m - 1 {
        for i in 0..n - 1 {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Upper hemisphere centered at the origin, open along the equator.
pub fn hemisphere(radius: f64, lon: usize, lat: usize) -> Result<TriangleMesh> {
    sphere_band(radius, lon.max(3), lat.max(1), 0.5 * PI, false)
}

/// Closed UV sphere centered at the origin.
pub fn sphere(radius: f64, lon: usize, lat: usize) -> Result<TriangleMesh> {
    sphere_band(radius, lon.max(3), lat.max(2), PI, true)
}

fn sphere_band(radius: f64, lon: usize, lat: usize, max_polar: f64, closed: bool) -> Result<TriangleMesh> {
    let mut vertices = vec![Point3::new(0.0, 0.0, radius)];
    let rings = if closed { lat - 1 } else { lat };
    for k in 1..=rings {
        let phi = max_polar * k as f64 / lat as f64;
        for i in 0..lon {
            let psi = 2.0 * PI * i as f64 / lon as f64;
            vertices.push(Point3::new(
                radius * phi.sin() * psi.cos(),
                radius * phi.sin() * psi.sin(),
                radius * phi.cos(),
            ));
        }
    }
    let id = |k: usize, i: usize| 1 + (k - 1) * lon + (i % lon);
    let mut faces = Vec::new();
    for i in 0..lon {
        faces.push([0, id(1, i), id(1, i + 1)]);
    }
    for k in 1..rings {
        for i in 0..lon {
            let (a, b, c, d) = (id(k, i), id(k + 1, i), id(k + 1, i + 1), id(k, i + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    if closed {
        vertices.push(Point3::new(0.0, 0.0, -radius));
        let south = vertices.len() - 1;
        for i in 0..lon {
            faces.push([south, id(rings, i + 1), id(rings, i)]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector3;

    fn outward(mesh: &TriangleMesh, center: Vector3) -> bool {
        (0..mesh.faces().len())
            .all(|f| mesh.face_normals()[f].dot(&(mesh.face_centroid(f).coords - center)) > 0.0)
    }

    #[test]
    fn plane_grid_counts() {
        let m = plane_grid(90.0, 90.0, 1.0).unwrap();
        assert_eq!(m.vertices().len(), 91 * 91);
        assert!((m.total_area() - 8100.0).abs() < 1e-9);
        assert!(m.vertices().iter().any(|v| v.x == -40.0 && v.y == 17.0));
    }

    #[test]
    fn half_cylinder_table_counts() {
        let m = half_cylinder(50.0, 100.0, 180, 2).unwrap();
        assert_eq!(m.vertices().len(), 360);
        assert_eq!(m.faces().len(), 358);
        let (lo, hi) = m.bounding_box();
        assert!((hi - lo - Vector3::new(100.0, 100.0, 50.0)).norm() < 1e-2);
        // normals point away from the axis
        assert!((0..m.faces().len()).all(|f| {
            let c = m.face_centroid(f);
            m.face_normals()[f].dot(&Vector3::new(c.x, 0.0, c.z)) > 0.0
        }));
    }

    #[test]
    fn sphere_shapes() {
        let s = sphere(50.0, 24, 12).unwrap();
        assert!(outward(&s, Vector3::zeros()));
        let h = hemisphere(50.0, 180, 180).unwrap();
        assert_eq!(h.vertices().len(), 32401);
        assert!(outward(&h, Vector3::zeros()));
        let b = box_mesh(100.0, 100.0, 100.0, false).unwrap();
        assert!(outward(&b, Vector3::new(0.0, 0.0, 50.0)));
        assert!((b.total_area() - 60_000.0).abs() < 1e-9);
    }
}
