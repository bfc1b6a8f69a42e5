//! Least-squares conformal flattening of disc-shaped meshes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, Vector2, Vector3};
use crate::sparse::{conjugate_gradient, CsrMatrix};
use crate::surface::normals::fit_plane;
use crate::surface::TriangleMesh;

use super::stroke::Box2;

pub const SOLVER_TOLERANCE: f64 = 1e-10;

/// Per-vertex 2D coordinates of a flattened mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamChart {
    pub uv: Vec<Point2>,
    pub vertex_xyz: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
    /// Vertices fixed at `(0, 0)` and `(d, 0)`.
    pub pins: [usize; 2],
    pub conformal_energy: f64,
    pub solver_iterations: usize,
}

impl ParamChart {
    /// Median over mesh edges of chart length divided by 3D length.
    pub fn scale(&self) -> f64 {
        let mut ratios: Vec<f64> = unique_edges(&self.faces)
            .into_iter()
            .map(|(a, b)| (self.uv[a] - self.uv[b]).norm() / (self.vertex_xyz[a] - self.vertex_xyz[b]).norm())
            .collect();
        ratios.sort_by(f64::total_cmp);
        ratios[ratios.len() / 2]
    }

    pub fn bounds(&self) -> Box2 {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.uv {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Box2::new(lo, hi)
    }
}

fn unique_edges(faces: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| (0..3).map(move |j| (f[j].min(f[(j + 1) % 3]), f[j].max(f[(j + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Checks that `mesh` is a connected, orientable manifold with one boundary
/// loop and Euler characteristic 1, and returns the boundary loop.
pub fn disc_boundary(mesh: &TriangleMesh) -> Result<Vec<usize>> {
    let faces = mesh.faces();
    let n = mesh.vertices().len();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in faces {
        for j in 0..3 {
            *directed.entry((f[j], f[(j + 1) % 3])).or_default() += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    for (&(a, b), &count) in &directed {
        if count > 1 {
            return Err(Error::InvalidMesh(format!("edge {a}-{b} is repeated or faces are inconsistently oriented")));
        }
        if directed.contains_key(&(b, a)) {
            continue;
        }
        if next.insert(a, b).is_some() {
            return Err(Error::RequiresDiscSegment(format!("vertex {a} is non-manifold")));
        }
    }
    let edges = unique_edges(faces).len();

    // connected components over face edges
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for f in faces {
        for j in 1..3 {
            let (a, b) = (find(&mut parent, f[0]), find(&mut parent, f[j]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let components = (0..n).filter(|&i| find(&mut parent, i) == i).count();
    if components != 1 {
        return Err(Error::RequiresDiscSegment(format!("{components} connected components")));
    }

    let mut starts: Vec<usize> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut seen = vec![false; n];
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for s in starts {
        if seen[s] {
            continue;
        }
        let mut lp = Vec::new();
        let mut v = s;
        while !seen[v] {
            seen[v] = true;
            lp.push(v);
            v = match next.get(&v) {
                Some(&w) => w,
                None => return Err(Error::RequiresDiscSegment(format!("boundary is open at vertex {v}"))),
            };
        }
        loops.push(lp);
    }
    if loops.is_empty() {
        return Err(Error::RequiresDiscSegment("closed surface has no boundary loop".into()));
    }
    if loops.len() > 1 {
        return Err(Error::RequiresDiscSegment(format!("{} boundary loops", loops.len())));
    }
    let euler = n as i64 - edges as i64 + faces.len() as i64;
    if euler != 1 {
        return Err(Error::RequiresDiscSegment(format!("Euler characteristic {euler}")));
    }
    Ok(loops.pop().unwrap())
}

/// The two boundary vertices farthest apart in 3D; ties keep the first pair.
pub fn default_pins(mesh: &TriangleMesh, boundary: &[usize]) -> [usize; 2] {
    let v = mesh.vertices();
    let mut best = (f64::NEG_INFINITY, [boundary[0], boundary[boundary.len().min(2) - 1]]);
    let mut sorted = boundary.to_vec();
    sorted.sort_unstable();
    for (i, &a) in sorted.iter().enumerate() {
        for &b in &sorted[i + 1..] {
            let d = (v[a] - v[b]).norm_squared();
            if d > best.0 {
                best = (d, [a, b]);
            }
        }
    }
    best.1
}

/// Rows of the conformality residual for one triangle, as
/// `[(vertex, coef_u, coef_v); 3]` for the real and imaginary parts.
fn triangle_rows(p: [Point3; 3]) -> Option<[[(f64, f64); 3]; 2]> {
    let e1 = p[1] - p[0];
    let n = e1.cross(&(p[2] - p[0]));
    let area2 = n.norm();
    if area2 <= 0.0 {
        return None;
    }
    let ex = e1.normalize();
    let ey = (n / area2).cross(&ex);
    let z: [Vector2; 3] = p.map(|q| Vector2::new((q - p[0]).dot(&ex), (q - p[0]).dot(&ey)));
    let s = 1.0 / area2.sqrt();
    let mut re = [(0.0, 0.0); 3];
    let mut im = [(0.0, 0.0); 3];
    for j in 0..3 {
        let w = z[(j + 2) % 3] - z[(j + 1) % 3];
        re[j] = (w.x * s, -w.y * s);
        im[j] = (w.y * s, w.x * s);
    }
    Some([re, im])
}

/// Flattening of the vertices onto their best-fit plane, moved so the pins
/// land on `(0, 0)` and `(d, 0)`. Exact for planar meshes; otherwise a
/// starting guess.
fn planar_guess(mesh: &TriangleMesh, pins: [usize; 2], d: f64) -> Option<Vec<Point2>> {
    let fit = fit_plane(mesh.vertices())?;
    let mean_normal: Vector3 = mesh.face_normals().iter().zip(mesh.face_areas()).map(|(n, a)| n.into_inner() * *a).sum();
    let n = if fit.normal.dot(&mean_normal) < 0.0 { -fit.normal } else { fit.normal };
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let ex = n.cross(&helper).normalize();
    let ey = n.cross(&ex);
    let flat: Vec<Vector2> = mesh
        .vertices()
        .iter()
        .map(|v| Vector2::new((v - fit.centroid).dot(&ex), (v - fit.centroid).dot(&ey)))
        .collect();
    let chord = flat[pins[1]] - flat[pins[0]];
    let len2 = chord.norm_squared();
    if len2 == 0.0 {
        return None;
    }
    // complex multiplication by d / chord
    let (cr, ci) = (d * chord.x / len2, -d * chord.y / len2);
    Some(
        flat.iter()
            .map(|w| {
                let r = w - flat[pins[0]];
                Point2::new(cr * r.x - ci * r.y, cr * r.y + ci * r.x)
            })
            .collect(),
    )
}

/// Least-squares conformal map of a disc mesh with two pinned vertices.
/// `pins` defaults to the two most distant boundary vertices.
pub fn lscm_unfold(mesh: &TriangleMesh, pins: Option<[usize; 2]>) -> Result<ParamChart> {
    let boundary = disc_boundary(mesh)?;
    let nv = mesh.vertices().len();
    let pins = match pins {
        Some(p) => {
            if p[0] == p[1] || p[0] >= nv || p[1] >= nv {
                return Err(Error::InvalidArgument(format!("pins {p:?} must be distinct vertices below {nv}")));
            }
            p
        }
        None => default_pins(mesh, &boundary),
    };
    let d = (mesh.vertices()[pins[1]] - mesh.vertices()[pins[0]]).norm();
    let pinned = [Point2::new(0.0, 0.0), Point2::new(d, 0.0)];

    // free vertices get unknowns 2k (u) and 2k + 1 (v)
    let mut var = vec![usize::MAX; nv];
    let mut k = 0;
    for (i, slot) in var.iter_mut().enumerate() {
        if i != pins[0] && i != pins[1] {
            *slot = k;
            k += 1;
        }
    }
    let n = 2 * k;
    let pin_value = |i: usize| if i == pins[0] { pinned[0] } else { pinned[1] };

    let mut rows: Vec<([(usize, f64); 6], f64)> = Vec::with_capacity(2 * mesh.faces().len());
    let mut triplets = Vec::with_capacity(72 * mesh.faces().len());
    let mut rhs = vec![0.0; n];
    for (f, face) in mesh.faces().iter().enumerate() {
        let Some(tr) = triangle_rows(mesh.triangle(f)) else { continue };
        for row in tr {
            let mut entries = [(usize::MAX, 0.0); 6];
            let mut constant = 0.0;
            for (j, &(cu, cv)) in row.iter().enumerate() {
                let vtx = face[j];
                if var[vtx] == usize::MAX {
                    let p = pin_value(vtx);
                    constant += cu * p.x + cv * p.y;
                } else {
                    entries[2 * j] = (2 * var[vtx], cu);
                    entries[2 * j + 1] = (2 * var[vtx] + 1, cv);
                }
            }
            for &(a, ca) in entries.iter().filter(|e| e.0 != usize::MAX) {
                rhs[a] -= ca * constant;
                for &(b, cb) in entries.iter().filter(|e| e.0 != usize::MAX) {
                    triplets.push((a, b, ca * cb));
                }
            }
            rows.push((entries, constant));
        }
    }
    let a = CsrMatrix::from_triplets(n, triplets);

    let mut x0 = vec![0.0; n];
    if let Some(guess) = planar_guess(mesh, pins, d) {
        for i in 0..nv {
            if var[i] != usize::MAX {
                x0[2 * var[i]] = guess[i].x;
                x0[2 * var[i] + 1] = guess[i].y;
            }
        }
    }
    let sol = conjugate_gradient(&a, &rhs, x0, SOLVER_TOLERANCE, 10 * n.max(1))?;

    let uv: Vec<Point2> = (0..nv)
        .map(|i| if var[i] == usize::MAX { pin_value(i) } else { Point2::new(sol.x[2 * var[i]], sol.x[2 * var[i] + 1]) })
        .collect();
    let conformal_energy = rows
        .iter()
        .map(|(entries, c)| {
            let r: f64 = entries.iter().filter(|e| e.0 != usize::MAX).map(|&(a, ca)| ca * sol.x[a]).sum::<f64>() + c;
            r * r
        })
        .sum();
    Ok(ParamChart {
        uv,
        vertex_xyz: mesh.vertices().to_vec(),
        faces: mesh.faces().to_vec(),
        pins,
        conformal_energy,
        solver_iterations: sol.iterations,
    })
}
