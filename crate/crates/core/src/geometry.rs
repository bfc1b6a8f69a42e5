//! Points, rigid transforms and unit quaternions.
//!
//! Lengths are millimeters throughout the crate.

use nalgebra::{Matrix3, Unit};
use serde::{Deserialize, Serialize};

pub type Point2 = nalgebra::Point2<f64>;
pub type Point3 = nalgebra::Point3<f64>;
pub type Vector2 = nalgebra::Vector2<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type UnitVector3 = Unit<Vector3>;

/// World +z.
pub fn z_axis() -> UnitVector3 {
    Vector3::z_axis()
}

/// Below this value of `1 + cos(angle)` two unit vectors are treated as
/// antiparallel.
const ANTIPARALLEL_EPS: f64 = 1e-15;

/// Minimal-angle rotation taking `from` onto `to`.
///
/// For antiparallel inputs the rotation is a half turn about the coordinate
/// axis least aligned with `from` (lowest index on ties), made orthogonal to
/// `from`.
pub fn rotation_between(from: &UnitVector3, to: &UnitVector3) -> Matrix3<f64> {
    let cross = from.cross(to);
    // 1 + cos = |from + to|^2 / 2, which keeps precision near the antipode.
    let one_plus_cos = 0.5 * (from.into_inner() + to.into_inner()).norm_squared();
    if one_plus_cos < ANTIPARALLEL_EPS {
        return half_turn(&antiparallel_axis(from));
    }
    let k = cross.cross_matrix();
    Matrix3::identity() + k + k * k * (1.0 / one_plus_cos)
}

fn antiparallel_axis(from: &UnitVector3) -> UnitVector3 {
    let mut best = 0;
    for i in 1..3 {
        if from[i].abs() < from[best].abs() {
            best = i;
        }
    }
    let mut e = Vector3::zeros();
    e[best] = 1.0;
    Unit::new_normalize(e - from.into_inner() * from.dot(&e))
}

fn half_turn(axis: &UnitVector3) -> Matrix3<f64> {
    let a = axis.into_inner();
    a * a.transpose() * 2.0 - Matrix3::identity()
}

/// Rotation matrix plus translation; maps local coordinates into the parent
/// frame as `R * p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self { rotation, translation: Vector3::zeros() }
    }

    pub fn from_translation(translation: Vector3) -> Self {
        Self { rotation: Matrix3::identity(), translation }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn invert(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn apply_vector(&self, v: &Vector3) -> Vector3 {
        self.rotation * v
    }

    /// Largest absolute entry difference of rotation and translation.
    pub fn max_abs_diff(&self, other: &RigidTransform) -> f64 {
        let r = (self.rotation - other.rotation).abs().max();
        let t = (self.translation - other.translation).abs().max();
        r.max(t)
    }

    /// Checks `RᵀR = I` and `det R = 1` within `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        let rtr = self.rotation.transpose() * self.rotation;
        (rtr - Matrix3::identity()).abs().max() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|v| v.is_finite())
    }
}

/// Unit quaternion `w + xi + yj + zk` kept in canonical sign: `w >= 0`, and
/// when `w == 0` the first nonzero of `x, y, z` is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", from = "[f64; 4]")]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.wxyz()
    }
}

impl From<[f64; 4]> for UnitQuaternion {
    fn from(v: [f64; 4]) -> Self {
        UnitQuaternion::new(v[0], v[1], v[2], v[3])
    }
}

impl UnitQuaternion {
    /// Normalizes and canonicalizes. Panics on a zero quaternion.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        assert!(n > 0.0 && n.is_finite(), "quaternion must be nonzero and finite");
        let mut q = [w / n, x / n, y / n, z / n];
        let negate = match q.iter().find(|c| **c != 0.0) {
            Some(first) => *first < 0.0,
            None => false,
        };
        if negate {
            q.iter_mut().for_each(|c| *c = -*c);
        }
        // drop signed zeros
        q.iter_mut().for_each(|c| *c += 0.0);
        Self { w: q[0], x: q[1], y: q[2], z: q[3] }
    }

    pub fn identity() -> Self {
        Self { w: 1.0, x: 0.0, y: 0.0, z: 0.0 }
    }

    pub fn from_axis_angle(axis: &UnitVector3, angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, axis.x * s, axis.y * s, axis.z * s)
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    fn dot(&self, other: &UnitQuaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Rotation angle in `[0, π]` separating two orientations.
    pub fn angle_to(&self, other: &UnitQuaternion) -> f64 {
        let a = self.wxyz();
        let mut b = other.wxyz();
        if self.dot(other) < 0.0 {
            b.iter_mut().for_each(|c| *c = -*c);
        }
        let diff: f64 = a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let sum: f64 = a.iter().zip(&b).map(|(p, q)| (p + q) * (p + q)).sum::<f64>().sqrt();
        4.0 * diff.atan2(sum)
    }

    /// Shepperd's method.
    pub fn from_rotation_matrix(m: &Matrix3<f64>) -> Self {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Self::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Self::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Self::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        }
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn rotate(&self, v: &Vector3) -> Vector3 {
        self.to_rotation_matrix() * v
    }
}

/// Below this half-angle SLERP falls back to normalized linear interpolation.
const SLERP_LINEAR_EPS: f64 = 1e-9;

/// Spherical linear interpolation along the shortest arc. `t` is clamped to
/// `[0, 1]`.
pub fn slerp(q0: &UnitQuaternion, q1: &UnitQuaternion, t: f64) -> UnitQuaternion {
    let t = t.clamp(0.0, 1.0);
    let a = q0.wxyz();
    let mut b = q1.wxyz();
    if q0.dot(q1) < 0.0 {
        b.iter_mut().for_each(|c| *c = -*c);
    }
    let half = q0.angle_to(q1) * 0.5;
    let (wa, wb) = if half < SLERP_LINEAR_EPS {
        (1.0 - t, t)
    } else {
        let s = half.sin();
        (((1.0 - t) * half).sin() / s, (t * half).sin() / s)
    };
    UnitQuaternion::new(
        wa * a[0] + wb * b[0],
        wa * a[1] + wb * b[1],
        wa * a[2] + wb * b[2],
        wa * a[3] + wb * b[3],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn unit(x: f64, y: f64, z: f64) -> UnitVector3 {
        Unit::new_normalize(Vector3::new(x, y, z))
    }

    #[test]
    fn rotation_between_identity_is_exact() {
        let r = rotation_between(&z_axis(), &z_axis());
        assert_eq!(r, Matrix3::identity());
    }

    #[test]
    fn rotation_between_z_and_x() {
        let r = rotation_between(&z_axis(), &unit(1.0, 0.0, 0.0));
        let out = r * Vector3::z();
        assert!((out - Vector3::x()).norm() < 1e-12);
        // quarter turn about -y
        let expected = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0);
        assert!((r - expected).abs().max() < 1e-12);
    }

    #[test]
    fn rotation_between_antiparallel_uses_x_axis() {
        let r = rotation_between(&z_axis(), &unit(0.0, 0.0, -1.0));
        assert!((r * Vector3::z() + Vector3::z()).norm() < 1e-12);
        let expected = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
        assert!((r - expected).abs().max() < 1e-15);
    }

    #[test]
    fn rotation_between_general_antiparallel_is_orthonormal() {
        let from = unit(0.3, -0.8, 0.52);
        let to = -from;
        let r = rotation_between(&from, &to);
        assert!((r * from.into_inner() - to.into_inner()).norm() < 1e-12);
        assert!(RigidTransform::from_rotation(r).is_valid(1e-12));
    }

    #[test]
    fn quaternion_canonical_sign() {
        let q = UnitQuaternion::new(-1.0, 0.0, 0.0, 0.0);
        assert_eq!(q.wxyz(), [1.0, 0.0, 0.0, 0.0]);
        let q = UnitQuaternion::new(0.0, 0.0, -2.0, 0.0);
        assert_eq!(q.wxyz(), [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn quaternion_matrix_round_trip() {
        let q = UnitQuaternion::from_axis_angle(&unit(1.0, 2.0, -0.5), 2.9);
        let back = UnitQuaternion::from_rotation_matrix(&q.to_rotation_matrix());
        assert!(q.angle_to(&back) < 1e-12);
        let half = UnitQuaternion::from_axis_angle(&unit(0.0, 1.0, 0.0), PI);
        let back = UnitQuaternion::from_rotation_matrix(&half.to_rotation_matrix());
        assert!(half.angle_to(&back) < 1e-12);
    }

    #[test]
    fn slerp_identities() {
        let q = UnitQuaternion::from_axis_angle(&unit(0.2, 0.1, 1.0), 1.0);
        let r = slerp(&q, &q, 0.5);
        assert!(q.angle_to(&r) < 1e-12);
        let q1 = UnitQuaternion::from_axis_angle(&unit(1.0, 0.0, 0.0), 2.0);
        assert!(slerp(&q, &q1, 0.0).angle_to(&q) < 1e-12);
        assert!(slerp(&q, &q1, 1.0).angle_to(&q1) < 1e-12);
    }

    #[test]
    fn slerp_halves_quarter_turn() {
        let z = z_axis();
        let q0 = UnitQuaternion::identity();
        let q1 = UnitQuaternion::from_axis_angle(&z, FRAC_PI_2);
        let mid = slerp(&q0, &q1, 0.5);
        let expected = UnitQuaternion::from_axis_angle(&z, FRAC_PI_4);
        assert!(mid.angle_to(&expected) < 1e-12);
    }

    #[test]
    fn slerp_takes_short_arc_across_double_cover() {
        let z = z_axis();
        let q0 = UnitQuaternion::from_axis_angle(&z, 0.1);
        // 2π - 0.1 is the same orientation as -0.1
        let q1 = UnitQuaternion::from_axis_angle(&z, -0.1);
        let mid = slerp(&q0, &q1, 0.5);
        assert!(mid.angle_to(&UnitQuaternion::identity()) < 1e-12);
    }

    #[test]
    fn transform_inverse_and_identity() {
        let id = RigidTransform::identity();
        assert_eq!(id.invert(), id);
        let t = RigidTransform::new(
            UnitQuaternion::from_axis_angle(&unit(1.0, 1.0, 0.0), 0.7).to_rotation_matrix(),
            Vector3::new(3.0, -2.0, 5.0),
        );
        assert_eq!(id.compose(&t), t);
        assert!(t.compose(&t.invert()).max_abs_diff(&id) < 1e-12);
    }
}
