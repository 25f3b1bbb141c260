//! Euler angles in the intrinsic Z-X-Y order: `R = Rz(a) · Rx(b) · Ry(c)`.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::quaternion::RotationMatrix;
use crate::error::Result;

/// Sequence-metadata tag for the only supported order.
pub const EULER_ORDER: &str = "ZXY";

/// Below this `cos(b)` the middle angle is treated as ±π/2.
const GIMBAL_EPS: f64 = 1e-12;

/// Three angles in radians, applied intrinsically as Z, then X, then Y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerTriple {
    pub z: f64,
    pub x: f64,
    pub y: f64,
}

impl EulerTriple {
    pub fn new(z: f64, x: f64, y: f64) -> Self {
        Self { z, x, y }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.z, self.x, self.y]
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

pub fn euler_to_rotmat(e: &EulerTriple) -> RotationMatrix {
    let (sa, ca) = e.z.sin_cos();
    let (sb, cb) = e.x.sin_cos();
    let (sc, cc) = e.y.sin_cos();
    RotationMatrix(Matrix3::new(
        ca * cc - sa * sb * sc,
        -sa * cb,
        ca * sc + sa * sb * cc,
        sa * cc + ca * sb * sc,
        ca * cb,
        sa * sc - ca * sb * cc,
        -cb * sc,
        sb,
        cb * cc,
    ))
}

/// Inverse of [`euler_to_rotmat`].
///
/// At gimbal lock (`b = ±π/2`) the third angle is set to 0 and the whole
/// remaining rotation about the shared axis is reported in the first.
pub fn rotmat_to_euler(r: &RotationMatrix) -> Result<EulerTriple> {
    r.validate()?;
    let m = r.matrix();
    let cb = m[(0, 1)].hypot(m[(1, 1)]);
    let b = m[(2, 1)].atan2(cb);
    if cb < GIMBAL_EPS {
        let a = m[(1, 0)].atan2(m[(0, 0)]);
        return Ok(EulerTriple::new(wrap_angle(a), b, 0.0));
    }
    let a = (-m[(0, 1)]).atan2(m[(1, 1)]);
    let c = (-m[(2, 0)]).atan2(m[(2, 2)]);
    Ok(EulerTriple::new(wrap_angle(a), wrap_angle(b), wrap_angle(c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::quaternion::Quaternion;
    use nalgebra::Vector3;
    use std::f64::consts::FRAC_PI_2;

    fn elementary(axis: usize, angle: f64) -> Matrix3<f64> {
        let mut v = Vector3::zeros();
        v[axis] = 1.0;
        Quaternion::from_axis_angle(v, angle).unwrap().to_rotation_matrix().0
    }

    #[test]
    fn matches_product_of_elementary_rotations() {
        let e = EulerTriple::new(0.3, -1.1, 2.5);
        let expected = elementary(2, e.z) * elementary(0, e.x) * elementary(1, e.y);
        let got = euler_to_rotmat(&e).0;
        assert!((got - expected).abs().max() < 1e-14);
    }

    #[test]
    fn identity_is_zero_angles() {
        let e = rotmat_to_euler(&RotationMatrix::identity()).unwrap();
        assert_eq!(e.to_array(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn quarter_turn_round_trip() {
        let e = rotmat_to_euler(&euler_to_rotmat(&EulerTriple::new(FRAC_PI_2, 0.0, 0.0))).unwrap();
        assert!((e.z - FRAC_PI_2).abs() < 1e-12 && e.x.abs() < 1e-12 && e.y.abs() < 1e-12);
    }

    #[test]
    fn gimbal_lock_folds_into_first_angle() {
        for &b in &[FRAC_PI_2, -FRAC_PI_2] {
            let r = euler_to_rotmat(&EulerTriple::new(0.4, b, 0.3));
            let e = rotmat_to_euler(&r).unwrap();
            assert_eq!(e.y, 0.0);
            assert!((e.x - b).abs() < 1e-7);
            let expected = if b > 0.0 { 0.7 } else { 0.1 };
            assert!((e.z - expected).abs() < 1e-9, "{e:?}");
            let back = euler_to_rotmat(&e);
            assert!((back.0 - r.0).abs().max() < 1e-9);
        }
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI + 0.5) - (-PI + 0.5)).abs() < 1e-12);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn non_orthonormal_rejected() {
        let r = RotationMatrix(Matrix3::new(2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0));
        assert!(rotmat_to_euler(&r).is_err());
    }
}
