use crate::error::{Error, Result};
use crate::geometry::Point2;

use super::stroke::{MappedPoint, Stroke3D, StrokeSet2D, SurfacePoint};
use super::PointRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Note {
    PlaneFitFallback,
    BackFacing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mapped {
    pub point: SurfacePoint,
    pub note: Option<Note>,
}

impl From<SurfacePoint> for Mapped {
    fn from(point: SurfacePoint) -> Self {
        Mapped { point, note: None }
    }
}

/// One mapping method seen as a walk over 2D points.
pub trait PointMapper {
    /// True when a point's image does not depend on the previous image.
    fn is_stateless(&self) -> bool;

    fn map_first(&self, p: &Point2) -> Result<Mapped>;

    /// Maps `to`, given the previous 2D point and its image.
    fn map_next(&self, from: &Point2, to: &Point2, prev: &SurfacePoint) -> Result<Mapped>;

    /// Maps a pen-up bridge point. Defaults to [`PointMapper::map_next`].
    fn map_bridge(&self, from: &Point2, to: &Point2, prev: &SurfacePoint) -> Result<Mapped> {
        self.map_next(from, to, prev)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SequenceNotes {
    pub notes: Vec<(PointRef, Note)>,
    pub dropped_bridge_points: usize,
}

/// Rewrites the point location carried by a mapping error.
pub(crate) fn locate(e: Error, stroke: usize, point: usize) -> Error {
    match e {
        Error::ProjectionMiss { .. } => Error::ProjectionMiss { stroke, point },
        Error::LeftSurface { distance, tolerance, .. } => Error::LeftSurface { stroke, point, distance, tolerance },
        Error::StrokeExceedsChart { .. } => Error::StrokeExceedsChart { stroke, point },
        other => other,
    }
}

/// Evenly spaced interior points of the segment `a → b`, at most `spacing` apart.
fn bridge_points(a: &Point2, b: &Point2, spacing: f64) -> Vec<Point2> {
    let len = (b - a).norm();
    if len == 0.0 {
        return Vec::new();
    }
    let n = (len / spacing).ceil().max(1.0) as usize;
    (1..n).map(|j| a + (b - a) * (j as f64 / n as f64)).collect()
}

/// Maps all strokes in order. Between strokes, the straight 2D bridge from
/// the previous end to the next start is walked at the median stroke
/// spacing; its points are emitted pen-up at the head of the next stroke.
/// Stateless mappers drop bridge points that fail to map; stateful ones
/// need every bridge point and propagate the failure.
pub fn sequence_strokes<M: PointMapper + ?Sized>(set: &StrokeSet2D, mapper: &M) -> Result<(Vec<Stroke3D>, SequenceNotes)> {
    let spacing = set.median_spacing();
    let mut notes = SequenceNotes::default();
    let mut out = Vec::with_capacity(set.strokes().len());
    let mut last: Option<(Point2, SurfacePoint)> = None;
    for (s, stroke) in set.strokes().iter().enumerate() {
        let mut points = Vec::with_capacity(stroke.points.len());
        if let Some((end, end3)) = last {
            let mut prev = (end, end3);
            for b in bridge_points(&end, &stroke.points[0], spacing) {
                match mapper.map_bridge(&prev.0, &b, &prev.1) {
                    Ok(m) => {
                        points.push(MappedPoint { position: m.point.position, normal: m.point.normal, pen_down: false });
                        prev = (b, m.point);
                    }
                    Err(_) if mapper.is_stateless() => notes.dropped_bridge_points += 1,
                    Err(e) => return Err(locate(e, s, 0)),
                }
            }
            last = Some(prev);
        }
        for (i, p) in stroke.points.iter().enumerate() {
            let m = match &last {
                None => mapper.map_first(p),
                Some((from, _)) if from == p => {
                    // zero-length bridge: continue from the previous image
                    let (_, q) = last.unwrap();
                    Ok(q.into())
                }
                Some((from, q)) => mapper.map_next(from, p, q),
            }
            .map_err(|e| locate(e, s, i))?;
            if let Some(note) = m.note {
                notes.notes.push(((s, i), note));
            }
            points.push(MappedPoint { position: m.point.position, normal: m.point.normal, pen_down: true });
            last = Some((*p, m.point));
        }
        out.push(Stroke3D { id: stroke.id.clone(), points, color: stroke.color.clone() });
    }
    Ok((out, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{z_axis, Point3};
    use crate::mapping::stroke::Stroke2D;

    /// Lifts points to z = 0, failing on the band 1.5 < y < 2.5.
    struct Lift;

    impl PointMapper for Lift {
        fn is_stateless(&self) -> bool {
            true
        }
        fn map_first(&self, p: &Point2) -> Result<Mapped> {
            if p.y > 1.5 && p.y < 2.5 {
                return Err(Error::ProjectionMiss { stroke: 0, point: 0 });
            }
            Ok(SurfacePoint { position: Point3::new(p.x, p.y, 0.0), normal: z_axis() }.into())
        }
        fn map_next(&self, _: &Point2, to: &Point2, _: &SurfacePoint) -> Result<Mapped> {
            self.map_first(to)
        }
    }

    fn set(strokes: &[&[(f64, f64)]]) -> StrokeSet2D {
        StrokeSet2D::new(
            strokes
                .iter()
                .enumerate()
                .map(|(i, s)| Stroke2D::new(format!("s{i}"), s.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_stroke_all_pen_down() {
        let (out, notes) = sequence_strokes(&set(&[&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]]), &Lift).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].points.len(), 3);
        assert!(out[0].points.iter().all(|p| p.pen_down));
        assert_eq!(notes.dropped_bridge_points, 0);
    }

    #[test]
    fn bridge_is_pen_up_and_subdivided() {
        let s = set(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, -4.0), (2.0, -4.0)]]);
        let (out, _) = sequence_strokes(&s, &Lift).unwrap();
        let up: Vec<_> = out[1].points.iter().filter(|p| !p.pen_down).collect();
        assert_eq!(up.len(), 3);
        assert_eq!(up[0].position, Point3::new(1.0, -1.0, 0.0));
        assert_eq!(out[1].pen_down().count(), 2);
    }

    #[test]
    fn shared_endpoint_has_empty_bridge() {
        let s = set(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (1.0, 1.0)]]);
        let (out, _) = sequence_strokes(&s, &Lift).unwrap();
        assert_eq!(out[1].points.len(), 2);
        assert_eq!(out[1].points[0].position, out[0].points[1].position);
    }

    #[test]
    fn failed_bridge_points_dropped_and_errors_located() {
        let s = set(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 4.0), (2.0, 4.0)]]);
        let (out, notes) = sequence_strokes(&s, &Lift).unwrap();
        assert_eq!(notes.dropped_bridge_points, 1);
        assert_eq!(out[1].points.len(), 4);
        let s = set(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 1.0), (1.0, 2.0)]]);
        match sequence_strokes(&s, &Lift) {
            Err(Error::ProjectionMiss { stroke, point }) => assert_eq!((stroke, point), (1, 1)),
            other => panic!("{other:?}"),
        }
    }
}
