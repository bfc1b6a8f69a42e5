use nalgebra::{Matrix3, SymmetricEigen, Unit};

use crate::error::{Error, Result};
use crate::geometry::{Point3, UnitVector3, Vector3};
use crate::kdtree::KdTree;

/// Relative size of the middle covariance eigenvalue below which a
/// neighborhood counts as collinear.
const COLLINEAR_RATIO: f64 = 1e-12;

/// Total-least-squares plane through a point set.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFit {
    pub centroid: Point3,
    /// Direction of least variance; sign is arbitrary.
    pub normal: UnitVector3,
}

impl PlaneFit {
    pub fn project(&self, p: &Point3) -> Point3 {
        let n = self.normal.into_inner();
        p - n * n.dot(&(p - self.centroid))
    }
}

/// Fits a plane by covariance eigen-decomposition. `None` when the points
/// are collinear or coincident.
pub fn fit_plane(points: &[Point3]) -> Option<PlaneFit> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let centroid = Point3::from(points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    if largest <= 0.0 || eig.eigenvalues[order[1]] <= COLLINEAR_RATIO * largest {
        return None;
    }
    let normal = Unit::new_normalize(eig.eigenvectors.column(order[0]).into_owned());
    Some(PlaneFit { centroid, normal })
}

/// PCA normals over `k` nearest neighbors (the point itself included),
/// flipped to face `viewpoint`. Collinear neighborhoods retry with doubled
/// `k` up to the point count.
pub fn estimate_normals(points: &[Point3], k: usize, viewpoint: &Point3) -> Result<Vec<UnitVector3>> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!("k must be at least 3, got {k}")));
    }
    if points.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need at least {k} points for normal estimation, got {}",
            points.len()
        )));
    }
    let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let tree = KdTree::new(&coords);
    let mut out = Vec::with_capacity(points.len());
    let mut hood = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut kk = k;
        let fit = loop {
            hood.clear();
            hood.extend(tree.k_nearest(&coords[i], kk).iter().map(|(j, _)| points[*j]));
            if let Some(fit) = fit_plane(&hood) {
                break fit;
            }
            if kk >= points.len() {
                return Err(Error::DegenerateNeighborhood);
            }
            kk = (kk * 2).min(points.len());
        };
        let mut n = fit.normal;
        if n.dot(&(viewpoint - p)) < 0.0 {
            n = -n;
        }
        out.push(n);
    }
    Ok(out)
}
