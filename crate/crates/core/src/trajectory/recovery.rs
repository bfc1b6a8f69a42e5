use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

use super::{PenPose, PoseTrajectory};

/// Default tip deviation in mm that pauses the motion.
pub const DEFAULT_THRESHOLD: f64 = 2.0;
/// Default lift height in mm.
pub const DEFAULT_LIFT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseStatus {
    Executed,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPose {
    pub pose: PenPose,
    pub status: PoseStatus,
}

/// Pen-up detour after a skipped pose: up along the local normal, then over
/// to the next pose. The descent is the next pose itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftSegment {
    /// Index of the skipped pose in the planned trajectory.
    pub after: usize,
    pub poses: Vec<PenPose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryAnnotatedTrajectory {
    pub poses: Vec<AnnotatedPose>,
    pub lifts: Vec<LiftSegment>,
    /// `|measured - planned tip|` per pen-down pose, mm.
    pub deviation: Vec<f64>,
    pub threshold: f64,
    pub lift: f64,
    pub stroke_ids: Vec<String>,
}

impl RecoveryAnnotatedTrajectory {
    pub fn skipped(&self) -> usize {
        self.poses.iter().filter(|p| p.status == PoseStatus::Skipped).count()
    }

    /// Motion as executed: skipped poses dropped, lift segments spliced in.
    pub fn flatten(&self) -> PoseTrajectory {
        let mut lifts = self.lifts.iter().peekable();
        let mut poses = Vec::with_capacity(self.poses.len() + 2 * self.lifts.len());
        for (i, p) in self.poses.iter().enumerate() {
            if p.status == PoseStatus::Executed {
                poses.push(p.pose);
            }
            while let Some(l) = lifts.next_if(|l| l.after == i) {
                poses.extend_from_slice(&l.poses);
            }
        }
        PoseTrajectory { poses, stroke_ids: self.stroke_ids.clone() }
    }

    /// `sample,deviation,above_threshold,skipped`, one row per pen-down pose.
    pub fn write_deviation_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "sample,deviation,above_threshold,skipped")?;
        let skipped = self.poses.iter().filter(|p| p.pose.pen_down).map(|p| p.status == PoseStatus::Skipped);
        for (i, (d, s)) in self.deviation.iter().zip(skipped).enumerate() {
            writeln!(w, "{i},{d:?},{},{s}", *d > self.threshold)?;
        }
        Ok(())
    }
}

fn lifted(p: &PenPose, lift: f64) -> PenPose {
    PenPose { tip: p.tip + p.normal.into_inner() * lift, pen_down: false, ..*p }
}

/// Compares measured tip positions with the planned pen-down poses. The
/// first sample of every run strictly above `threshold` is skipped: the pen
/// lifts by `lift` along the normal, travels above the next pose and resumes
/// there.
pub fn detect_and_recover(
    planned: &PoseTrajectory,
    measured: &[Point3],
    threshold: f64,
    lift: f64,
) -> Result<RecoveryAnnotatedTrajectory> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    if !(lift.is_finite() && lift >= 0.0) {
        return Err(Error::InvalidArgument(format!("lift must be non-negative, got {lift}")));
    }
    let down: Vec<usize> = (0..planned.poses.len()).filter(|&i| planned.poses[i].pen_down).collect();
    if down.len() != measured.len() {
        return Err(Error::LengthMismatch { expected: down.len(), actual: measured.len() });
    }
    let deviation: Vec<f64> = down.iter().zip(measured).map(|(&i, m)| (m - planned.poses[i].tip).norm()).collect();
    let mut poses: Vec<AnnotatedPose> =
        planned.poses.iter().map(|&pose| AnnotatedPose { pose, status: PoseStatus::Executed }).collect();
    let mut lifts = Vec::new();
    let mut above = false;
    for (k, &d) in deviation.iter().enumerate() {
        let now = d > threshold;
        if now && !above {
            let i = down[k];
            poses[i].status = PoseStatus::Skipped;
            let mut seg = vec![lifted(&planned.poses[i], lift)];
            if let Some(next) = planned.poses.get(i + 1) {
                seg.push(lifted(next, lift));
            }
            lifts.push(LiftSegment { after: i, poses: seg });
        }
        above = now;
    }
    Ok(RecoveryAnnotatedTrajectory { poses, lifts, deviation, threshold, lift, stroke_ids: planned.stroke_ids.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{z_axis, UnitQuaternion};

    fn planned(n: usize) -> PoseTrajectory {
        let poses = (0..n)
            .map(|i| PenPose {
                tip: Point3::new(i as f64, 0.0, 0.0),
                orientation: UnitQuaternion::identity(),
                pen_down: i != 0,
                normal: z_axis(),
                stroke: 0,
            })
            .collect();
        PoseTrajectory { poses, stroke_ids: vec!["s".into()] }
    }

    fn measured(t: &PoseTrajectory) -> Vec<Point3> {
        t.pen_down_poses().map(|p| p.tip).collect()
    }

    #[test]
    fn exact_tracking_has_no_skips() {
        let t = planned(20);
        let r = detect_and_recover(&t, &measured(&t), DEFAULT_THRESHOLD, DEFAULT_LIFT).unwrap();
        assert_eq!(r.skipped(), 0);
        assert!(r.lifts.is_empty());
        assert_eq!(r.flatten(), t);
    }

    #[test]
    fn four_spikes_four_skips() {
        let t = planned(40);
        let mut m = measured(&t);
        for k in [3, 10, 11, 25, 38] {
            m[k].y += 5.0;
        }
        let r = detect_and_recover(&t, &m, DEFAULT_THRESHOLD, DEFAULT_LIFT).unwrap();
        // 10 and 11 form one run
        assert_eq!(r.skipped(), 4);
        assert_eq!(r.lifts.len(), 4);
        assert_eq!(r.lifts.iter().map(|l| l.after).collect::<Vec<_>>(), vec![4, 11, 26, 39]);
        let l = &r.lifts[0];
        assert_eq!(l.poses[0].tip, Point3::new(4.0, 0.0, 10.0));
        assert_eq!(l.poses[1].tip, Point3::new(5.0, 0.0, 10.0));
        assert_eq!(r.lifts[3].poses.len(), 1);
        assert_eq!(r.flatten().poses.len(), 40 - 4 + 7);
    }

    #[test]
    fn threshold_is_strict() {
        let t = planned(5);
        let mut m = measured(&t);
        m[1].z += 2.0;
        let r = detect_and_recover(&t, &m, 2.0, 10.0).unwrap();
        assert_eq!(r.skipped(), 0);
        let mut buf = Vec::new();
        r.write_deviation_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(2).unwrap(), "1,2.0,false,false");
    }

    #[test]
    fn bad_inputs_rejected() {
        let t = planned(5);
        let m = measured(&t);
        assert!(matches!(detect_and_recover(&t, &m[1..], 2.0, 10.0), Err(Error::LengthMismatch { .. })));
        assert!(detect_and_recover(&t, &m, 0.0, 10.0).is_err());
        assert!(detect_and_recover(&t, &m, 2.0, -1.0).is_err());
    }
}
