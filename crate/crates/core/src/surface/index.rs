use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::kdtree::KdTree;

use super::sampling::SurfaceSample;

/// Exact nearest-neighbor index over surface samples.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    samples: Vec<SurfaceSample>,
    tree: KdTree<3>,
}

fn key(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

impl SpatialIndex {
    pub fn new(samples: Vec<SurfaceSample>) -> Self {
        let coords: Vec<[f64; 3]> = samples.iter().map(|s| key(&s.position)).collect();
        SpatialIndex { tree: KdTree::new(&coords), samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SurfaceSample] {
        &self.samples
    }

    /// Closest sample and its distance.
    pub fn nearest(&self, p: &Point3) -> Result<(&SurfaceSample, f64)> {
        let (i, d) = self.tree.nearest(&key(p)).ok_or(Error::EmptySurface)?;
        Ok((&self.samples[i], d))
    }

    pub fn nearest_index(&self, p: &Point3) -> Result<(usize, f64)> {
        self.tree.nearest(&key(p)).ok_or(Error::EmptySurface)
    }

    /// The `k` closest samples in ascending distance; equal distances keep
    /// insertion order.
    pub fn k_nearest(&self, p: &Point3, k: usize) -> Result<Vec<(&SurfaceSample, f64)>> {
        if self.is_empty() {
            return Err(Error::EmptySurface);
        }
        if k > self.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} exceeds index size {}",
                self.len()
            )));
        }
        Ok(self.tree.k_nearest(&key(p), k).into_iter().map(|(i, d)| (&self.samples[i], d)).collect())
    }

    /// Mean nearest-neighbor spacing estimated on an evenly strided subset of
    /// at most `probes` samples.
    pub fn mean_spacing(&self, probes: usize) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let stride = (self.len() / probes.max(1)).max(1);
        let mut sum = 0.0;
        let mut n = 0usize;
        for i in (0..self.len()).step_by(stride) {
            let nn = self.tree.k_nearest(&key(&self.samples[i].position), 2);
            sum += nn[1].1;
            n += 1;
        }
        sum / n as f64
    }
}
