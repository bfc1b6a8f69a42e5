use std::collections::HashMap;

use nalgebra::Unit;

use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3, Vector3};

/// Vertices closer than this are merged at load time.
pub const MERGE_TOLERANCE: f64 = 1e-9;
/// Faces with area at or below this (mm²) are dropped at load time.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Indexed triangle mesh with cached face normals and areas.
///
/// Construction merges coincident vertices, drops zero-area faces and
/// compacts away vertices no face references.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    face_normals: Vec<UnitVector3>,
    face_areas: Vec<f64>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(bad) = faces.iter().flatten().find(|&&i| i >= vertices.len()) {
            return Err(Error::InvalidMesh(format!(
                "face index {bad} out of range for {} vertices",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh("non-finite vertex".into()));
        }

        // merge duplicates
        let mut remap = Vec::with_capacity(vertices.len());
        let mut merged: Vec<Point3> = Vec::with_capacity(vertices.len());
        let mut seen: HashMap<[i64; 3], usize> = HashMap::new();
        for v in &vertices {
            let key = [0, 1, 2].map(|i| (v[i] / MERGE_TOLERANCE).round() as i64);
            let idx = *seen.entry(key).or_insert_with(|| {
                merged.push(*v);
                merged.len() - 1
            });
            remap.push(idx);
        }

        let mut kept = Vec::with_capacity(faces.len());
        for f in &faces {
            let g = f.map(|i| remap[i]);
            if g[0] == g[1] || g[1] == g[2] || g[0] == g[2] {
                continue;
            }
            if triangle_area(&merged[g[0]], &merged[g[1]], &merged[g[2]]) <= MIN_FACE_AREA {
                continue;
            }
            kept.push(g);
        }

        // compact unused vertices, preserving order
        let mut used = vec![usize::MAX; merged.len()];
        let mut compact = Vec::new();
        for f in &kept {
            for &i in f {
                if used[i] == usize::MAX {
                    used[i] = 0;
                }
            }
        }
        for (i, u) in used.iter_mut().enumerate() {
            if *u != usize::MAX {
                *u = compact.len();
                compact.push(merged[i]);
            }
        }
        let faces: Vec<[usize; 3]> = kept.iter().map(|f| f.map(|i| used[i])).collect();
        if faces.is_empty() {
            return Err(Error::EmptySurface);
        }
        Ok(Self::from_clean(compact, faces))
    }

    fn from_clean(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Self {
        let mut face_normals = Vec::with_capacity(faces.len());
        let mut face_areas = Vec::with_capacity(faces.len());
        for f in &faces {
            let (a, b, c) = (&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            let n = (b - a).cross(&(c - a));
            face_areas.push(0.5 * n.norm());
            face_normals.push(Unit::new_normalize(n));
        }
        TriangleMesh { vertices, faces, face_normals, face_areas }
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_normals(&self) -> &[UnitVector3] {
        &self.face_normals
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        self.faces[face].map(|i| self.vertices[i])
    }

    pub fn face_centroid(&self, face: usize) -> Point3 {
        let [a, b, c] = self.triangle(face);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Area-weighted mean of face centroids.
    pub fn geometric_center(&self) -> Point3 {
        let mut acc = Vector3::zeros();
        for (i, a) in self.face_areas.iter().enumerate() {
            acc += self.face_centroid(i).coords * *a;
        }
        Point3::from(acc / self.total_area())
    }

    pub fn bounding_box(&self) -> (Point3, Point3) {
        bounding_box(&self.vertices)
    }

    /// Area-weighted vertex normals; vertices of a clean mesh always touch at
    /// least one face.
    pub fn vertex_normals(&self) -> Vec<UnitVector3> {
        let mut weighted = vec![Vector3::zeros(); self.vertices.len()];
        for ((f, n), a) in self.faces.iter().zip(&self.face_normals).zip(&self.face_areas) {
            for &i in f {
                weighted[i] += n.into_inner() * *a;
            }
        }
        weighted.into_iter().map(Unit::new_normalize).collect()
    }

    /// One incident face per vertex (the lowest face index).
    pub fn vertex_faces(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &i in f {
                if out[i] == usize::MAX {
                    out[i] = fi;
                }
            }
        }
        out
    }

    /// Exact closest point over all faces: `(face, point, distance)`.
    pub fn closest_point(&self, p: &Point3) -> (usize, Point3, f64) {
        let mut best = (0, self.vertices[self.faces[0][0]], f64::INFINITY);
        for fi in 0..self.faces.len() {
            let [a, b, c] = self.triangle(fi);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if d < best.2 {
                best = (fi, q, d);
            }
        }
        best
    }
}

pub fn triangle_area(a: &Point3, b: &Point3, c: &Point3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn bounding_box(points: &[Point3]) -> (Point3, Point3) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

/// Barycentric coordinates of `p` (assumed in the triangle's plane).
pub fn barycentric(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> [f64; 3] {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    [1.0 - v - w, v, w]
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn normals_and_area() {
        let m = square();
        assert_eq!(m.total_area(), 1.0);
        for n in m.face_normals() {
            assert_eq!(n.into_inner(), Vector3::z());
        }
    }

    #[test]
    fn cleanup_merges_and_drops() {
        let m = TriangleMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(1.0, 0.0, 0.0), // duplicate of 1
                Point3::new(2.0, 0.0, 0.0), // collinear face
                Point3::new(7.0, 7.0, 7.0), // unused
            ],
            vec![[0, 1, 2], [3, 2, 0], [0, 1, 4]],
        )
        .unwrap();
        assert_eq!(m.vertices().len(), 3);
        assert_eq!(m.faces().len(), 2);
    }

    #[test]
    fn bad_index_rejected() {
        let err = TriangleMesh::new(vec![Point3::origin()], vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn all_degenerate_is_empty() {
        let err = TriangleMesh::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptySurface));
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) =
            (Point3::new(0.0, 0.0, 0.0), Point3::new(2.0, 0.0, 0.0), Point3::new(0.0, 2.0, 0.0));
        let q = closest_point_on_triangle(&Point3::new(0.5, 0.5, 3.0), &a, &b, &c);
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
        let q = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(q, a);
        let q = closest_point_on_triangle(&Point3::new(2.0, 2.0, 0.0), &a, &b, &c);
        assert!((q - Point3::new(1.0, 1.0, 0.0)).norm() < 1e-15);
    }
}
