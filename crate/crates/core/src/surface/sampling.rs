use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSource {
    /// Interior sample of a mesh face.
    Face(usize),
    /// Original mesh vertex, with its lowest-index incident face.
    Vertex { vertex: usize, face: usize },
    /// Point of a point cloud.
    Point(usize),
}

impl SampleSource {
    pub fn face(&self) -> Option<usize> {
        match *self {
            SampleSource::Face(f) => Some(f),
            SampleSource::Vertex { face, .. } => Some(face),
            SampleSource::Point(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub position: Point3,
    pub normal: UnitVector3,
    pub source: SampleSource,
}

fn point_in_triangle(rng: &mut ChaCha8Rng, tri: &[Point3; 3]) -> Point3 {
    let s = rng.random::<f64>().sqrt();
    let r = rng.random::<f64>();
    let (b0, b1, b2) = (1.0 - s, s * (1.0 - r), s * r);
    Point3::from(tri[0].coords * b0 + tri[1].coords * b1 + tri[2].coords * b2)
}

/// Area-uniform random samples; each carries its face normal.
pub fn sample_mesh(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<Vec<SurfaceSample>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    if mesh.faces().is_empty() {
        return Err(Error::EmptySurface);
    }
    let mut cumulative = Vec::with_capacity(mesh.faces().len());
    let mut total = 0.0;
    for a in mesh.face_areas() {
        total += a;
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = cumulative.len() - 1;
    let out = (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            let face = cumulative.partition_point(|c| *c <= u).min(last);
            let position = point_in_triangle(&mut rng, &mesh.triangle(face));
            SurfaceSample { position, normal: mesh.face_normals()[face], source: SampleSource::Face(face) }
        })
        .collect();
    Ok(out)
}

/// The mesh vertices as samples, with area-weighted vertex normals.
pub fn vertex_samples(mesh: &TriangleMesh) -> Vec<SurfaceSample> {
    let normals = mesh.vertex_normals();
    let faces = mesh.vertex_faces();
    mesh.vertices()
        .iter()
        .enumerate()
        .map(|(i, p)| SurfaceSample {
            position: *p,
            normal: normals[i],
            source: SampleSource::Vertex { vertex: i, face: faces[i] },
        })
        .collect()
}

/// Viewpoint weighting `1 / (1 + exp(θ − π/2)) − 0.5`, clamped at zero so
/// faces turned away from the sensor get no weight.
pub fn viewpoint_density(theta: f64) -> f64 {
    let rho = 1.0 / (1.0 + (theta - FRAC_PI_2).exp()) - 0.5;
    rho.max(0.0)
}

/// Angle between a face normal and the center-to-sensor direction.
pub fn view_angle(normal: &UnitVector3, center: &Point3, sensor: &Point3) -> f64 {
    let d = sensor - center;
    normal.cross(&d).norm().atan2(normal.dot(&d))
}

/// Splits `count` proportionally to `weights` with the largest-remainder
/// rule; ties go to the lower index. Zero weights receive nothing.
pub fn allocate(weights: &[f64], count: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let mut alloc = vec![0usize; weights.len()];
    if total <= 0.0 || count == 0 {
        return alloc;
    }
    let mut rems = Vec::with_capacity(weights.len());
    let mut assigned = 0usize;
    for (i, w) in weights.iter().enumerate() {
        let exact = *w / total * count as f64;
        let base = exact.floor() as usize;
        alloc[i] = base;
        assigned += base;
        if *w > 0.0 {
            rems.push((exact - base as f64, i));
        }
    }
    // floating point can overshoot by a unit in rare cases
    while assigned > count {
        let (_, i) = rems
            .iter()
            .filter(|(_, i)| alloc[*i] > 0)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
            .copied()
            .expect("some face is allocated");
        alloc[i] -= 1;
        assigned -= 1;
    }
    rems.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in rems.iter().cycle().take(count - assigned) {
        alloc[*i] += 1;
    }
    alloc
}

/// Partial-view template: per-face sample counts proportional to
/// `area × viewpoint_density(θ_face)`, exactly `count` samples in total.
pub fn sample_partial_view(
    mesh: &TriangleMesh,
    sensor: &Point3,
    count: usize,
    seed: u64,
) -> Result<Vec<SurfaceSample>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    let (lo, hi) = mesh.bounding_box();
    if (0..3).all(|i| sensor[i] >= lo[i] && sensor[i] <= hi[i]) {
        return Err(Error::InvalidArgument("sensor position lies inside the mesh bounding box".into()));
    }
    let center = mesh.geometric_center();
    let weights: Vec<f64> = mesh
        .face_normals()
        .iter()
        .zip(mesh.face_areas())
        .map(|(n, a)| a * viewpoint_density(view_angle(n, &center, sensor)))
        .collect();
    if weights.iter().all(|w| *w <= 0.0) {
        return Err(Error::NoVisibleSurface);
    }
    let alloc = allocate(&weights, count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for (face, n) in alloc.iter().enumerate() {
        let tri = mesh.triangle(face);
        for _ in 0..*n {
            out.push(SurfaceSample {
                position: point_in_triangle(&mut rng, &tri),
                normal: mesh.face_normals()[face],
                source: SampleSource::Face(face),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::mesh::barycentric;
    use std::f64::consts::PI;

    fn unit_square() -> TriangleMesh {
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
    fn density_values() {
        assert_eq!(viewpoint_density(FRAC_PI_2), 0.0);
        let expected = 1.0 / (1.0 + (-FRAC_PI_2).exp()) - 0.5;
        assert_eq!(viewpoint_density(0.0), expected);
        assert!((expected - 0.327_897_101_316_336_2).abs() < 1e-12);
        assert_eq!(viewpoint_density(PI), 0.0);
    }

    #[test]
    fn density_is_nonincreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let v = viewpoint_density(PI * i as f64 / 1000.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn square_split_is_binomial() {
        let m = unit_square();
        let n = 100_000;
        let s = sample_mesh(&m, n, 3).unwrap();
        let first = s.iter().filter(|x| x.source == SampleSource::Face(0)).count() as f64;
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((first - n as f64 / 2.0).abs() < 3.0 * sigma, "{first}");
    }

    #[test]
    fn samples_lie_on_source_face() {
        let m = unit_square();
        for s in sample_mesh(&m, 500, 1).unwrap() {
            let f = s.source.face().unwrap();
            let [a, b, c] = m.triangle(f);
            let w = barycentric(&s.position, &a, &b, &c);
            assert!(w.iter().all(|x| *x >= -1e-9), "{w:?}");
        }
        let one = sample_mesh(&m, 1, 9).unwrap();
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn deterministic_per_seed() {
        let m = unit_square();
        let a = sample_mesh(&m, 100, 5).unwrap();
        let b = sample_mesh(&m, 100, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_mesh(&m, 100, 6).unwrap());
    }

    #[test]
    fn zero_count_rejected() {
        assert!(sample_mesh(&unit_square(), 0, 0).is_err());
        assert!(sample_partial_view(&unit_square(), &Point3::new(0.5, 0.5, 5.0), 0, 0).is_err());
    }

    #[test]
    fn allocation_is_exact() {
        let w = [1.0, 1.0, 1.0, 0.0, 2.5];
        for n in [0, 1, 7, 1000, 999_999] {
            let a = allocate(&w, n);
            assert_eq!(a.iter().sum::<usize>(), n);
            assert_eq!(a[3], 0);
        }
    }

    #[test]
    fn back_facing_square_rejected() {
        let err = sample_partial_view(&unit_square(), &Point3::new(0.5, 0.5, -5.0), 10, 0);
        assert!(matches!(err, Err(Error::NoVisibleSurface)));
    }
}
