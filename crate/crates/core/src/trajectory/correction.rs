use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, RigidTransform, UnitQuaternion};

use super::PoseTrajectory;

/// Tolerance on rotation orthonormality when validating inputs.
const RIGID_TOL: f64 = 1e-6;

/// Pen pose in the world as simulated and as estimated, plus the ideal grasp
/// (hand pose in the pen frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspCorrection {
    pub sim_world: RigidTransform,
    pub real_world: RigidTransform,
    pub hand_sim: RigidTransform,
}

impl GraspCorrection {
    pub fn identity() -> Self {
        let id = RigidTransform::identity();
        GraspCorrection { sim_world: id, real_world: id, hand_sim: id }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("sim_world", &self.sim_world), ("real_world", &self.real_world), ("hand_sim", &self.hand_sim)] {
            if !t.is_valid(RIGID_TOL) {
                return Err(Error::InvalidArgument(format!("{name} is not a rigid transform")));
            }
        }
        Ok(())
    }
}

/// Actual grasp, as the hand pose in the frame of the physically held pen:
/// `real_world⁻¹ ∘ sim_world ∘ hand_sim`.
pub fn correct_grasp(c: &GraspCorrection) -> Result<RigidTransform> {
    c.validate()?;
    Ok(c.real_world.invert().compose(&c.sim_world).compose(&c.hand_sim))
}

/// Re-expresses every pose as the pen pose to command, assuming the ideal
/// grasp, so that the actually held pen lands on the planned pose:
/// `P ∘ hand_real ∘ hand_sim⁻¹`. Normals and flags are kept.
pub fn apply_correction(traj: &PoseTrajectory, c: &GraspCorrection) -> Result<PoseTrajectory> {
    let offset = correct_grasp(c)?.compose(&c.hand_sim.invert());
    let poses = traj
        .poses
        .iter()
        .map(|p| {
            let t = p.transform().compose(&offset);
            let mut out = *p;
            out.tip = Point3::from(t.translation);
            out.orientation = UnitQuaternion::from_rotation_matrix(&t.rotation);
            out
        })
        .collect();
    Ok(PoseTrajectory { poses, stroke_ids: traj.stroke_ids.clone() })
}

/// Tip positions reached when commanded poses are executed with a hand
/// holding the pen at `hand_real` instead of `hand_sim`.
pub fn executed_tip_path(commanded: &PoseTrajectory, hand_sim: &RigidTransform, hand_real: &RigidTransform) -> Vec<Point3> {
    let to_real = hand_sim.compose(&hand_real.invert());
    commanded
        .poses
        .iter()
        .map(|p| Point3::from(p.transform().compose(&to_real).translation))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{z_axis, Vector3};
    use crate::trajectory::PenPose;
    use nalgebra::Rotation3;

    fn rigid(axis: Vector3, angle: f64, t: Vector3) -> RigidTransform {
        RigidTransform::new(*Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).matrix(), t)
    }

    fn sample_traj() -> PoseTrajectory {
        let poses = (0..5)
            .map(|i| PenPose {
                tip: Point3::new(i as f64, 2.0, 0.5 * i as f64),
                orientation: UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.1 * i as f64),
                pen_down: i != 2,
                normal: z_axis(),
                stroke: 0,
            })
            .collect();
        PoseTrajectory { poses, stroke_ids: vec!["s".into()] }
    }

    #[test]
    fn equal_estimates_return_ideal_grasp() {
        let sim = rigid(Vector3::new(1.0, 2.0, 3.0), 0.7, Vector3::new(4.0, 5.0, 6.0));
        let hand = rigid(Vector3::new(0.0, 1.0, 0.0), -0.3, Vector3::new(0.0, 0.0, 120.0));
        let c = GraspCorrection { sim_world: sim, real_world: sim, hand_sim: hand };
        assert!(correct_grasp(&c).unwrap().max_abs_diff(&hand) < 1e-12);
    }

    #[test]
    fn known_disturbance_composition() {
        let sim = rigid(Vector3::new(1.0, 0.0, 1.0), 0.4, Vector3::new(10.0, 0.0, 5.0));
        let d = rigid(Vector3::new(0.0, 1.0, 1.0), 0.2, Vector3::new(1.0, -2.0, 0.5));
        let hand = rigid(Vector3::new(1.0, 1.0, 0.0), 1.1, Vector3::new(0.0, 3.0, 100.0));
        let c = GraspCorrection { sim_world: sim, real_world: d.compose(&sim), hand_sim: hand };
        let r = correct_grasp(&c).unwrap();
        let expected = sim.invert().compose(&d.invert()).compose(&sim).compose(&hand);
        assert!(r.max_abs_diff(&expected) < 1e-12);
        assert!(c.real_world.compose(&r).max_abs_diff(&sim.compose(&hand)) < 1e-12);
    }

    #[test]
    fn identity_correction_keeps_trajectory() {
        let t = sample_traj();
        let out = apply_correction(&t, &GraspCorrection::identity()).unwrap();
        for (a, b) in t.poses.iter().zip(&out.poses) {
            assert!((a.tip - b.tip).norm() < 1e-12);
            assert!(a.orientation.angle_to(&b.orientation) < 1e-9);
        }
    }

    #[test]
    fn pen_frame_translation_shifts_tips() {
        let t = sample_traj();
        let d = Vector3::new(0.5, -1.0, 2.0);
        let sim = rigid(Vector3::new(0.0, 0.0, 1.0), 0.3, Vector3::new(1.0, 1.0, 1.0));
        let c = GraspCorrection {
            sim_world: sim,
            real_world: sim.compose(&RigidTransform::from_translation(d)),
            hand_sim: RigidTransform::identity(),
        };
        let out = apply_correction(&t, &c).unwrap();
        for (a, b) in t.poses.iter().zip(&out.poses) {
            let expected = a.tip - a.orientation.rotate(&d);
            assert!((b.tip - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn corrected_commands_reproduce_path() {
        let t = sample_traj();
        let sim = rigid(Vector3::new(0.3, 1.0, 0.2), 0.9, Vector3::new(300.0, -20.0, 400.0));
        let d = rigid(Vector3::new(1.0, -1.0, 0.5), 0.15, Vector3::new(3.0, 1.0, -4.0));
        let hand = rigid(Vector3::new(0.0, 0.0, 1.0), 0.5, Vector3::new(0.0, 0.0, 110.0));
        let c = GraspCorrection { sim_world: sim, real_world: d.compose(&sim), hand_sim: hand };
        let hand_real = correct_grasp(&c).unwrap();
        let out = apply_correction(&t, &c).unwrap();
        for (a, b) in t.poses.iter().zip(executed_tip_path(&out, &hand, &hand_real)) {
            assert!((a.tip - b).norm() < 1e-9);
        }
    }

    #[test]
    fn invalid_transform_rejected() {
        let mut c = GraspCorrection::identity();
        c.hand_sim.rotation[(0, 0)] = 2.0;
        assert!(correct_grasp(&c).is_err());
    }
}
