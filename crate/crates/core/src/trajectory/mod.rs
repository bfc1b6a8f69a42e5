//! Pen poses along mapped strokes, SLERP densification, in-hand grasp
//! correction and deviation-triggered recovery.

mod correction;
mod recovery;

pub use correction::{apply_correction, correct_grasp, executed_tip_path, GraspCorrection};
pub use recovery::{detect_and_recover, DEFAULT_LIFT, DEFAULT_THRESHOLD, AnnotatedPose, LiftSegment, PoseStatus, RecoveryAnnotatedTrajectory};

use std::io::Write;

use nalgebra::{Matrix3, Unit};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_between, slerp, Point3, RigidTransform, UnitQuaternion, UnitVector3, Vector3};
use crate::mapping::Stroke3D;

/// Default pen-up standoff above the surface in mm.
pub const DEFAULT_STANDOFF: f64 = 10.0;
/// Default densification bound on the orientation change per step.
pub const DEFAULT_MAX_STEP_ANGLE: f64 = 5.0 * std::f64::consts::PI / 180.0;
/// Default densification bound on the tip travel per step in mm.
pub const DEFAULT_MAX_STEP_DIST: f64 = 2.0;

/// Relative slack on step bounds, absorbing rounding in `Δ / bound`.
const BOUND_SLACK: f64 = 1e-9;

/// Pen pose in the world frame. The pen axis is the local `+z` axis; with the
/// pen down it points into the surface, along `-normal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenPose {
    pub tip: Point3,
    pub orientation: UnitQuaternion,
    pub pen_down: bool,
    /// Surface normal at the tip, or beneath it for pen-up poses.
    pub normal: UnitVector3,
    /// Index into [`PoseTrajectory::stroke_ids`].
    pub stroke: usize,
}

impl PenPose {
    pub fn axis(&self) -> Vector3 {
        self.orientation.rotate(&Vector3::z())
    }

    pub fn transform(&self) -> RigidTransform {
        RigidTransform::new(self.orientation.to_rotation_matrix(), self.tip.coords)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseTrajectory {
    pub poses: Vec<PenPose>,
    pub stroke_ids: Vec<String>,
}

impl PoseTrajectory {
    pub fn pen_down_count(&self) -> usize {
        self.poses.iter().filter(|p| p.pen_down).count()
    }

    pub fn pen_down_poses(&self) -> impl Iterator<Item = &PenPose> {
        self.poses.iter().filter(|p| p.pen_down)
    }

    /// Largest orientation change between consecutive pen-down poses.
    pub fn max_pen_down_step(&self) -> f64 {
        self.poses
            .windows(2)
            .filter(|w| w[0].pen_down && w[1].pen_down)
            .map(|w| w[0].orientation.angle_to(&w[1].orientation))
            .fold(0.0, f64::max)
    }

    /// `index,stroke,stroke_id,x,y,z,qw,qx,qy,qz,pen_down`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "index,stroke,stroke_id,x,y,z,qw,qx,qy,qz,pen_down")?;
        for (i, p) in self.poses.iter().enumerate() {
            let q = p.orientation.wxyz();
            writeln!(
                w,
                "{i},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                p.stroke, self.stroke_ids[p.stroke], p.tip.x, p.tip.y, p.tip.z, q[0], q[1], q[2], q[3], p.pen_down
            )?;
        }
        Ok(())
    }
}

/// Orientation whose `+z` is `-normal` and whose `+x` is `x_hint` projected
/// onto the tangent plane.
fn frame(normal: &UnitVector3, x_hint: &Vector3) -> Option<UnitQuaternion> {
    let z = -normal.into_inner();
    let x = x_hint - z * z.dot(x_hint);
    if x.norm() < 1e-6 {
        return None;
    }
    let x = x.normalize();
    let y = z.cross(&x);
    Some(UnitQuaternion::from_rotation_matrix(&Matrix3::from_columns(&[x, y, z])))
}

fn first_frame(normal: &UnitVector3) -> UnitQuaternion {
    frame(normal, &Vector3::x())
        .or_else(|| frame(normal, &Vector3::y()))
        .expect("x and y cannot both be parallel to a unit normal")
}

/// Poses along the strokes in order. The pen axis points along `-normal`;
/// the roll is parallel-transported from the previous pose, starting with the
/// local x axis on world x projected into the tangent plane (world y if x is
/// along the normal). Pen-up poses sit `standoff` mm off the surface along
/// the normal.
pub fn attach_poses(strokes: &[Stroke3D], standoff: f64) -> Result<PoseTrajectory> {
    if !(standoff.is_finite() && standoff >= 0.0) {
        return Err(Error::InvalidArgument(format!("standoff must be finite and non-negative, got {standoff}")));
    }
    let mut poses: Vec<PenPose> = Vec::new();
    for (s, stroke) in strokes.iter().enumerate() {
        for p in &stroke.points {
            let orientation = match poses.last() {
                None => first_frame(&p.normal),
                Some(prev) => {
                    let x_prev = prev.orientation.rotate(&Vector3::x());
                    let x = rotation_between(&prev.normal, &p.normal) * x_prev;
                    frame(&p.normal, &x).unwrap_or_else(|| first_frame(&p.normal))
                }
            };
            let tip = if p.pen_down { p.position } else { p.position + p.normal.into_inner() * standoff };
            poses.push(PenPose { tip, orientation, pen_down: p.pen_down, normal: p.normal, stroke: s });
        }
    }
    if poses.is_empty() {
        return Err(Error::InvalidArgument("trajectory needs at least one point".into()));
    }
    Ok(PoseTrajectory { poses, stroke_ids: strokes.iter().map(|s| s.id.clone()).collect() })
}

fn check_bound(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// Number of equal steps needed between two poses.
fn step_count(a: &PenPose, b: &PenPose, max_angle: f64, max_dist: f64) -> usize {
    let ratio = (a.orientation.angle_to(&b.orientation) / max_angle).max((b.tip - a.tip).norm() / max_dist);
    ((ratio - BOUND_SLACK).ceil() as usize).max(1)
}

/// Inserts poses between consecutive poses that exceed either bound: SLERP
/// orientations, linear tips, equal steps. Original poses are kept verbatim.
/// Inserted poses are pen-down only between two pen-down poses.
pub fn densify_slerp(traj: &PoseTrajectory, max_step_angle: f64, max_step_dist: f64) -> Result<PoseTrajectory> {
    check_bound("max_step_angle", max_step_angle)?;
    check_bound("max_step_dist", max_step_dist)?;
    let mut poses = Vec::with_capacity(traj.poses.len());
    for (i, b) in traj.poses.iter().enumerate() {
        if let Some(a) = i.checked_sub(1).map(|j| &traj.poses[j]) {
            let n = step_count(a, b, max_step_angle, max_step_dist);
            for k in 1..n {
                let t = k as f64 / n as f64;
                let orientation = slerp(&a.orientation, &b.orientation, t);
                poses.push(PenPose {
                    tip: a.tip + (b.tip - a.tip) * t,
                    orientation,
                    pen_down: a.pen_down && b.pen_down,
                    normal: Unit::new_normalize(-orientation.rotate(&Vector3::z())),
                    stroke: b.stroke,
                });
            }
        }
        poses.push(*b);
    }
    Ok(PoseTrajectory { poses, stroke_ids: traj.stroke_ids.clone() })
}

/// Pose indices whose orientation change from the preceding pose exceeds
/// `max_step_angle`, both poses pen-down, with the jump in radians.
pub fn discontinuity_report(traj: &PoseTrajectory, max_step_angle: f64) -> Vec<(usize, f64)> {
    traj.poses
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].pen_down && w[1].pen_down)
        .map(|(i, w)| (i + 1, w[0].orientation.angle_to(&w[1].orientation)))
        .filter(|(_, jump)| *jump > max_step_angle * (1.0 + BOUND_SLACK))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::z_axis;
    use crate::mapping::MappedPoint;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn stroke(id: &str, pts: Vec<(Point3, Vector3, bool)>) -> Stroke3D {
        Stroke3D {
            id: id.into(),
            points: pts
                .into_iter()
                .map(|(position, n, pen_down)| MappedPoint { position, normal: Unit::new_normalize(n), pen_down })
                .collect(),
            color: None,
        }
    }

    fn flat_line(n: usize) -> Stroke3D {
        stroke("a", (0..n).map(|i| (Point3::new(i as f64, 0.0, 0.0), Vector3::z(), true)).collect())
    }

    /// Top face then side face of a box edge at x = 50, z = 100.
    fn box_edge() -> Stroke3D {
        let mut pts: Vec<_> = (0..6).map(|i| (Point3::new(45.0 + i as f64, 0.0, 100.0), Vector3::z(), true)).collect();
        pts.extend((1..6).map(|i| (Point3::new(50.0, 0.0, 100.0 - i as f64), Vector3::x(), true)));
        stroke("edge", pts)
    }

    #[test]
    fn plane_orientations_identical() {
        let t = attach_poses(&[flat_line(10)], 10.0).unwrap();
        let q0 = t.poses[0].orientation;
        for p in &t.poses {
            assert_eq!(p.orientation, q0);
            assert!((p.axis() - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        }
        // local x on world x
        assert!((q0.rotate(&Vector3::x()) - Vector3::x()).norm() < 1e-12);
        assert!(discontinuity_report(&t, DEFAULT_MAX_STEP_ANGLE).is_empty());
    }

    #[test]
    fn cylinder_axis_radial_inward() {
        let pts = (0..72)
            .map(|i| {
                let a = PI * i as f64 / 71.0;
                let n = Vector3::new(a.cos(), 0.0, a.sin());
                (Point3::from(n * 50.0), n, true)
            })
            .collect();
        let t = attach_poses(&[stroke("c", pts)], 10.0).unwrap();
        for p in &t.poses {
            let inward = -p.tip.coords.normalize();
            assert!(p.axis().angle(&inward) < 1e-6);
        }
    }

    #[test]
    fn pen_up_standoff() {
        let s = stroke(
            "b",
            vec![
                (Point3::new(0.0, 0.0, 0.0), Vector3::x(), false),
                (Point3::new(0.0, 1.0, 0.0), Vector3::x(), true),
                (Point3::new(0.0, 2.0, 0.0), Vector3::x(), true),
            ],
        );
        let t = attach_poses(&[s], 10.0).unwrap();
        assert_eq!(t.poses[0].tip, Point3::new(10.0, 0.0, 0.0));
        assert_eq!(t.poses[1].tip, Point3::new(0.0, 1.0, 0.0));
        assert!(attach_poses(&[], 10.0).is_err());
    }

    #[test]
    fn first_frame_falls_back_to_world_y() {
        let q = first_frame(&Unit::new_normalize(Vector3::x()));
        assert!((q.rotate(&Vector3::x()) - Vector3::y()).norm() < 1e-12);
        assert!((q.rotate(&Vector3::z()) + Vector3::x()).norm() < 1e-12);
    }

    #[test]
    fn within_bounds_unchanged() {
        let t = attach_poses(&[flat_line(5)], 10.0).unwrap();
        assert_eq!(densify_slerp(&t, 0.1, 2.0).unwrap(), t);
    }

    #[test]
    fn quarter_turn_gets_two_inserts() {
        let a = PenPose { tip: Point3::origin(), orientation: UnitQuaternion::identity(), pen_down: true, normal: -z_axis(), stroke: 0 };
        let b = PenPose { orientation: UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2), ..a };
        let t = PoseTrajectory { poses: vec![a, b], stroke_ids: vec!["s".into()] };
        let d = densify_slerp(&t, PI / 6.0, 1.0).unwrap();
        assert_eq!(d.poses.len(), 4);
        assert_eq!(d.poses[0], a);
        assert_eq!(d.poses[3], b);
        assert!((a.orientation.angle_to(&d.poses[1].orientation) - PI / 6.0).abs() < 1e-12);
        assert!((a.orientation.angle_to(&d.poses[2].orientation) - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn box_edge_jump_removed_by_densification() {
        let t = attach_poses(&[box_edge()], 10.0).unwrap();
        let report = discontinuity_report(&t, DEFAULT_MAX_STEP_ANGLE);
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].0, 6);
        assert!((report[0].1 - FRAC_PI_2).abs() < 1e-9);
        let d = densify_slerp(&t, DEFAULT_MAX_STEP_ANGLE, DEFAULT_MAX_STEP_DIST).unwrap();
        assert!(discontinuity_report(&d, DEFAULT_MAX_STEP_ANGLE).is_empty());
        assert_eq!(d.poses.len(), t.poses.len() + 17);
    }

    #[test]
    fn densified_keeps_originals_in_order() {
        let t = attach_poses(&[box_edge()], 10.0).unwrap();
        let d = densify_slerp(&t, 0.05, 0.3).unwrap();
        let mut it = d.poses.iter();
        for p in &t.poses {
            assert!(it.any(|q| q == p));
        }
        assert!(d.poses.windows(2).all(|w| (w[1].tip - w[0].tip).norm() <= 0.3 * (1.0 + 1e-9)));
        assert!(d.max_pen_down_step() <= 0.05 * (1.0 + 1e-9));
    }

    #[test]
    fn bad_bounds_rejected() {
        let t = attach_poses(&[flat_line(3)], 10.0).unwrap();
        assert!(densify_slerp(&t, 0.0, 1.0).is_err());
        assert!(densify_slerp(&t, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn csv_has_row_per_pose() {
        let t = attach_poses(&[flat_line(3)], 10.0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
