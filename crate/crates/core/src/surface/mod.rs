//! Target surfaces: meshes and point clouds behind one sample index.

pub mod generators;
pub mod index;
pub mod io;
pub mod mesh;
pub mod normals;
pub mod sampling;

pub use index::SpatialIndex;
pub use mesh::TriangleMesh;
pub use sampling::{SampleSource, SurfaceSample};

use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3};

/// Multiple of the mean sample spacing used as the snap gate.
pub const SNAP_SPACING_FACTOR: f64 = 5.0;
const SPACING_PROBES: usize = 2000;

/// A drawing target: samples with normals in an exact spatial index, plus
/// the mesh when one exists.
#[derive(Debug, Clone)]
pub struct SurfaceModel {
    mesh: Option<TriangleMesh>,
    index: SpatialIndex,
    snap_tolerance: f64,
}

impl SurfaceModel {
    /// Mesh target sampled with the original vertices followed by `count`
    /// area-uniform samples.
    pub fn from_mesh(mesh: TriangleMesh, count: usize, seed: u64) -> Result<Self> {
        let mut samples = sampling::vertex_samples(&mesh);
        samples.extend(sampling::sample_mesh(&mesh, count, seed)?);
        Ok(Self::with_samples(Some(mesh), samples))
    }

    /// Point cloud target with known normals.
    pub fn from_point_cloud(points: &[Point3], normals: &[UnitVector3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySurface);
        }
        if points.len() != normals.len() {
            return Err(Error::LengthMismatch { expected: points.len(), actual: normals.len() });
        }
        let samples = points
            .iter()
            .zip(normals)
            .enumerate()
            .map(|(i, (p, n))| SurfaceSample { position: *p, normal: *n, source: SampleSource::Point(i) })
            .collect();
        Ok(Self::with_samples(None, samples))
    }

    /// Point cloud target with PCA normals facing `viewpoint`.
    pub fn from_points(points: &[Point3], k: usize, viewpoint: &Point3) -> Result<Self> {
        let normals = normals::estimate_normals(points, k, viewpoint)?;
        Self::from_point_cloud(points, &normals)
    }

    fn with_samples(mesh: Option<TriangleMesh>, samples: Vec<SurfaceSample>) -> Self {
        let index = SpatialIndex::new(samples);
        let snap_tolerance = SNAP_SPACING_FACTOR * index.mean_spacing(SPACING_PROBES);
        SurfaceModel { mesh, index, snap_tolerance }
    }

    pub fn with_snap_tolerance(mut self, tolerance: f64) -> Self {
        self.snap_tolerance = tolerance;
        self
    }

    pub fn mesh(&self) -> Option<&TriangleMesh> {
        self.mesh.as_ref()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn samples(&self) -> &[SurfaceSample] {
        self.index.samples()
    }

    /// Gating radius for snaps and ray hits.
    pub fn snap_tolerance(&self) -> f64 {
        self.snap_tolerance
    }
}
