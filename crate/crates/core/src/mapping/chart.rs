//! Placing strokes on a flattened chart and lifting chart points back to 3D.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::geometry::{rotation_between, z_axis, Point2, Point3, UnitVector3, Vector2, Vector3};
use crate::grid::BucketGrid;
use crate::kdtree::KdTree;
use crate::surface::mesh::barycentric;
use crate::surface::{SampleSource, SurfaceSample, TriangleMesh};

use super::lscm::ParamChart;
use super::sequence::{Mapped, PointMapper};
use super::stroke::{StrokeSet2D, SurfacePoint};
use super::ScaleMode;

/// Strokes expressed in chart coordinates.
#[derive(Debug, Clone)]
pub struct Registration {
    pub strokes: StrokeSet2D,
    /// Chart units per mm.
    pub scale: f64,
    pub anchor_uv: Point2,
    /// Maps stroke offsets (mm) to chart offsets.
    pub linear: Matrix2<f64>,
}

/// Chart coordinates of a 3D point lying on face `f`.
fn chart_point(chart: &ParamChart, f: usize, p: &Point3) -> Point2 {
    let [a, b, c] = chart.faces[f];
    let w = barycentric(p, &chart.vertex_xyz[a], &chart.vertex_xyz[b], &chart.vertex_xyz[c]);
    Point2::from(chart.uv[a].coords * w[0] + chart.uv[b].coords * w[1] + chart.uv[c].coords * w[2])
}

/// Chart image of the tangent vector `t` under face `f`'s linear map.
fn push_forward(chart: &ParamChart, f: usize, t: &Vector3) -> Vector2 {
    let [a, b, c] = chart.faces[f];
    let (e1, e2) = (chart.vertex_xyz[b] - chart.vertex_xyz[a], chart.vertex_xyz[c] - chart.vertex_xyz[a]);
    let (f1, f2) = (chart.uv[b] - chart.uv[a], chart.uv[c] - chart.uv[a]);
    let g = Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
    let coef = g.try_inverse().unwrap_or_else(Matrix2::zeros) * nalgebra::Vector2::new(t.dot(&e1), t.dot(&e2));
    f1 * coef.x + f2 * coef.y
}

/// Places the strokes on the chart so the first stroke point sits at the
/// chart image of `anchor`. Stroke x and y follow the chart images of the
/// anchor's tangent frame (the frame `+z → normal` carries `x, y` into),
/// made orthogonal, and lengths scale by the chart's units per mm.
pub fn register_strokes_to_chart(
    set: &StrokeSet2D,
    chart: &ParamChart,
    mesh: &TriangleMesh,
    anchor: &SurfacePoint,
    scale_mode: ScaleMode,
    tolerance: f64,
) -> Result<Registration> {
    let (face, on_mesh, dist) = mesh.closest_point(&anchor.position);
    if dist > tolerance {
        return Err(Error::AnchorNotOnChart(dist));
    }
    let anchor_uv = chart_point(chart, face, &on_mesh);
    let frame = rotation_between(&z_axis(), &anchor.normal);
    let m = Matrix2::from_columns(&[
        push_forward(chart, face, &(frame * Vector3::x())),
        push_forward(chart, face, &(frame * Vector3::y())),
    ]);
    let svd = m.svd(true, true);
    let q = svd.u.unwrap() * svd.v_t.unwrap();
    let scale = match scale_mode {
        ScaleMode::Fit => chart.scale(),
        ScaleMode::Explicit(s) => s,
    };
    let linear = q * scale;
    let origin = set.strokes()[0].points[0];
    let strokes = set.map_points(|p| anchor_uv + linear * (p - origin))?;
    Ok(Registration { strokes, scale, anchor_uv, linear })
}

/// Lifts chart points to the surface: either the nearest chart site
/// (vertex or lifted sample) or barycentric interpolation in the host
/// triangle.
pub struct ChartMapper<'a> {
    chart: &'a ParamChart,
    face_normals: &'a [UnitVector3],
    grid: BucketGrid,
    interpolate: bool,
    sites: Vec<(Point3, UnitVector3)>,
    site_tree: Option<KdTree<2>>,
}

impl<'a> ChartMapper<'a> {
    /// `samples` with a face source are lifted into the chart as extra
    /// sites for nearest-site lookup.
    pub fn new(chart: &'a ParamChart, mesh: &'a TriangleMesh, samples: &[SurfaceSample], interpolate: bool) -> Self {
        let boxes: Vec<(Point2, Point2)> = chart
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|v| chart.uv[v]);
                (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
            })
            .collect();
        let b = chart.bounds();
        let cell = (b.width() * b.height() / chart.faces.len().max(1) as f64).sqrt();
        let grid = BucketGrid::new(&boxes, cell);
        let (sites, site_tree) = if interpolate {
            (Vec::new(), None)
        } else {
            let normals = mesh.vertex_normals();
            let mut sites: Vec<(Point3, UnitVector3)> = chart.vertex_xyz.iter().copied().zip(normals).collect();
            let mut keys: Vec<[f64; 2]> = chart.uv.iter().map(|p| [p.x, p.y]).collect();
            for s in samples {
                if let SampleSource::Face(f) = s.source {
                    let uv = chart_point(chart, f, &s.position);
                    keys.push([uv.x, uv.y]);
                    sites.push((s.position, s.normal));
                }
            }
            (sites, Some(KdTree::new(&keys)))
        };
        ChartMapper { chart, face_normals: mesh.face_normals(), grid, interpolate, sites, site_tree }
    }

    /// Host triangle of a chart point and its barycentric weights.
    pub fn locate(&self, p: &Point2) -> Option<(usize, [f64; 3])> {
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &f in self.grid.candidates(p) {
            let f = f as usize;
            let [a, b, c] = self.chart.faces[f].map(|v| self.chart.uv[v]);
            let (v0, v1, v2) = (b - a, c - a, p - a);
            let den = v0.x * v1.y - v1.x * v0.y;
            if den == 0.0 {
                continue;
            }
            let wb = (v2.x * v1.y - v1.x * v2.y) / den;
            let wc = (v0.x * v2.y - v2.x * v0.y) / den;
            let w = [1.0 - wb - wc, wb, wc];
            let min = w[0].min(w[1]).min(w[2]);
            if min >= -1e-9 && best.is_none_or(|(m, _, _)| min > m) {
                best = Some((min, f, w));
            }
        }
        best.map(|(_, f, w)| (f, w))
    }

    pub fn lift(&self, p: &Point2) -> Result<SurfacePoint> {
        let (f, w) = self.locate(p).ok_or(Error::StrokeExceedsChart { stroke: 0, point: 0 })?;
        if self.interpolate {
            let [a, b, c] = self.chart.faces[f].map(|v| self.chart.vertex_xyz[v].coords);
            return Ok(SurfacePoint { position: Point3::from(a * w[0] + b * w[1] + c * w[2]), normal: self.face_normals[f] });
        }
        let tree = self.site_tree.as_ref().expect("site tree built for nearest-site lookup");
        let (i, _) = tree.nearest(&[p.x, p.y]).ok_or(Error::EmptySurface)?;
        let (position, normal) = self.sites[i];
        Ok(SurfacePoint { position, normal })
    }
}

impl PointMapper for ChartMapper<'_> {
    fn is_stateless(&self) -> bool {
        true
    }

    fn map_first(&self, p: &Point2) -> Result<Mapped> {
        self.lift(p).map(Mapped::from)
    }

    fn map_next(&self, _from: &Point2, to: &Point2, _prev: &SurfacePoint) -> Result<Mapped> {
        self.map_first(to)
    }
}
