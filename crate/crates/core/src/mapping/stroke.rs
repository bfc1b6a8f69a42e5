use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, UnitVector3};

/// Consecutive points closer than this are rejected.
pub const MIN_SEGMENT: f64 = 1e-9;

/// Axis-aligned 2D box in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2 {
    pub min: Point2,
    pub max: Point2,
}

impl Box2 {
    pub fn new(min: Point2, max: Point2) -> Self {
        Box2 { min, max }
    }

    /// Box of the given size centered on the origin.
    pub fn centered(width: f64, height: f64) -> Self {
        Box2 { min: Point2::new(-0.5 * width, -0.5 * height), max: Point2::new(0.5 * width, 0.5 * height) }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        p.x >= self.min.x - tol && p.x <= self.max.x + tol && p.y >= self.min.y - tol && p.y <= self.max.y + tol
    }

    fn of<'a>(points: impl Iterator<Item = &'a Point2>) -> Self {
        let mut b = Box2 {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        for p in points {
            b.min.x = b.min.x.min(p.x);
            b.min.y = b.min.y.min(p.y);
            b.max.x = b.max.x.max(p.x);
            b.max.y = b.max.y.max(p.y);
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke2D {
    pub id: String,
    pub points: Vec<Point2>,
    /// Pen tag; strokes sharing a tag are drawn with the same pen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

impl Stroke2D {
    pub fn new(id: impl Into<String>, points: Vec<Point2>) -> Result<Self> {
        let s = Stroke2D { id: id.into(), points, color: None };
        s.validate()?;
        Ok(s)
    }

    pub fn with_color(mut self, color: impl Into<String>) -> Self {
        self.color = Some(color.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(Error::InvalidArgument(format!("stroke {:?} has fewer than 2 points", self.id)));
        }
        if self.points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidArgument(format!("stroke {:?} has a non-finite point", self.id)));
        }
        if let Some(i) = self.points.windows(2).position(|w| (w[1] - w[0]).norm() <= MIN_SEGMENT) {
            return Err(Error::InvalidArgument(format!(
                "stroke {:?} repeats point {} at index {}",
                self.id,
                i,
                i + 1
            )));
        }
        Ok(())
    }

    pub fn segment_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm())
    }
}

/// Ordered, non-empty stroke collection with its bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeSet2D {
    strokes: Vec<Stroke2D>,
    bounds: Box2,
}

impl StrokeSet2D {
    pub fn new(strokes: Vec<Stroke2D>) -> Result<Self> {
        if strokes.is_empty() {
            return Err(Error::InvalidArgument("stroke set is empty".into()));
        }
        for s in &strokes {
            s.validate()?;
        }
        let bounds = Box2::of(strokes.iter().flat_map(|s| s.points.iter()));
        Ok(StrokeSet2D { strokes, bounds })
    }

    pub fn strokes(&self) -> &[Stroke2D] {
        &self.strokes
    }

    pub fn into_strokes(self) -> Vec<Stroke2D> {
        self.strokes
    }

    pub fn bounds(&self) -> Box2 {
        self.bounds
    }

    pub fn point_count(&self) -> usize {
        self.strokes.iter().map(|s| s.points.len()).sum()
    }

    /// Median segment length over all strokes.
    pub fn median_spacing(&self) -> f64 {
        let mut v: Vec<f64> = self.strokes.iter().flat_map(|s| s.segment_lengths()).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    }

    /// Applies `f` to every point, keeping ids and colors.
    pub fn map_points(&self, f: impl Fn(&Point2) -> Point2) -> Result<StrokeSet2D> {
        let strokes = self
            .strokes
            .iter()
            .map(|s| Stroke2D { id: s.id.clone(), points: s.points.iter().map(&f).collect(), color: s.color.clone() })
            .collect();
        StrokeSet2D::new(strokes)
    }
}

/// Lattice of `rows` horizontal strokes followed by `cols` vertical strokes
/// spanning `region`, each with `points` evenly spaced points.
pub fn lattice(region: Box2, rows: usize, cols: usize, points: usize) -> Result<StrokeSet2D> {
    if points < 2 || rows + cols == 0 {
        return Err(Error::InvalidArgument("lattice needs at least one stroke of 2 points".into()));
    }
    let lerp = |a: f64, b: f64, i: usize, n: usize| {
        if n <= 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    };
    let mut strokes = Vec::with_capacity(rows + cols);
    for r in 0..rows {
        let y = lerp(region.min.y, region.max.y, r, rows);
        let pts = (0..points).map(|i| Point2::new(lerp(region.min.x, region.max.x, i, points), y)).collect();
        strokes.push(Stroke2D::new(format!("row{r}"), pts)?);
    }
    for c in 0..cols {
        let x = lerp(region.min.x, region.max.x, c, cols);
        let pts = (0..points).map(|i| Point2::new(x, lerp(region.min.y, region.max.y, i, points))).collect();
        strokes.push(Stroke2D::new(format!("col{c}"), pts)?);
    }
    StrokeSet2D::new(strokes)
}

/// Uniform scale and translation that centers the strokes' bounding box in
/// `workspace` and inscribes it.
pub fn scale_to_workspace(set: &StrokeSet2D, workspace: &Box2) -> Result<StrokeSet2D> {
    if !(workspace.width() > 0.0 && workspace.height() > 0.0) {
        return Err(Error::InvalidArgument("workspace must have positive extent".into()));
    }
    let b = set.bounds();
    let scale = match (b.width() > 0.0, b.height() > 0.0) {
        (true, true) => (workspace.width() / b.width()).min(workspace.height() / b.height()),
        (true, false) => workspace.width() / b.width(),
        (false, true) => workspace.height() / b.height(),
        (false, false) => return Err(Error::InvalidArgument("stroke bounds are degenerate".into())),
    };
    let (from, to) = (b.center(), workspace.center());
    set.map_points(|p| to + (p - from) * scale)
}

/// A mapped point on the target surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub position: Point3,
    pub normal: UnitVector3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MappedPoint {
    pub position: Point3,
    pub normal: UnitVector3,
    pub pen_down: bool,
}

/// Mapped stroke. Pen-up points (the bridge from the previous stroke) come
/// first; the pen-down points correspond one-to-one with the 2D stroke.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stroke3D {
    pub id: String,
    pub points: Vec<MappedPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
}

impl Stroke3D {
    pub fn pen_down(&self) -> impl Iterator<Item = &MappedPoint> {
        self.points.iter().filter(|p| p.pen_down)
    }

    pub fn pen_down_positions(&self) -> Vec<Point3> {
        self.pen_down().map(|p| p.position).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_layout() {
        let l = lattice(Box2::centered(80.0, 80.0), 9, 9, 81).unwrap();
        assert_eq!(l.strokes().len(), 18);
        assert!(l.strokes().iter().all(|s| s.points.len() == 81));
        assert_eq!(l.strokes()[0].points[1], Point2::new(-39.0, -40.0));
        assert_eq!(l.strokes()[9].points[80], Point2::new(-40.0, 40.0));
        assert_eq!(l.median_spacing(), 1.0);
    }

    #[test]
    fn scaling_identity_when_filling() {
        let l = lattice(Box2::centered(80.0, 80.0), 3, 3, 11).unwrap();
        let s = scale_to_workspace(&l, &Box2::centered(80.0, 80.0)).unwrap();
        for (a, b) in l.strokes().iter().zip(s.strokes()) {
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!((p - q).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn scaling_halves_about_center() {
        let l = lattice(Box2::new(Point2::new(10.0, 10.0), Point2::new(170.0, 170.0)), 5, 5, 17).unwrap();
        let s = scale_to_workspace(&l, &Box2::centered(80.0, 80.0)).unwrap();
        for (a, b) in l.strokes().iter().zip(s.strokes()) {
            for (p, q) in a.points.iter().zip(&b.points) {
                let expected = Point2::new((p.x - 90.0) * 0.5, (p.y - 90.0) * 0.5);
                assert!((expected - q).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn scaling_preserves_aspect() {
        let st = Stroke2D::new("a", vec![Point2::new(0.0, 0.0), Point2::new(100.0, 50.0)]).unwrap();
        let set = StrokeSet2D::new(vec![st]).unwrap();
        let s = scale_to_workspace(&set, &Box2::centered(60.0, 60.0)).unwrap();
        let b = s.bounds();
        assert!((b.width() - 60.0).abs() < 1e-12 && (b.height() - 30.0).abs() < 1e-12);
        assert!((b.center() - Point2::origin()).norm() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(Stroke2D::new("a", vec![Point2::new(0.0, 0.0)]).is_err());
        assert!(Stroke2D::new("a", vec![Point2::new(0.0, 0.0), Point2::new(0.0, 0.0)]).is_err());
        assert!(StrokeSet2D::new(vec![]).is_err());
        // all strokes at one point cannot be built, so a zero-extent workspace is the remaining case
        let l = lattice(Box2::centered(10.0, 10.0), 1, 1, 3).unwrap();
        assert!(scale_to_workspace(&l, &Box2::centered(0.0, 10.0)).is_err());
    }
}
