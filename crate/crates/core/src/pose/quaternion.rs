//! Quaternions stored as `[x, y, z, w]` (vector part first) and the
//! exponential map between axis-angle vectors and unit quaternions.

use std::f64::consts::{PI, TAU};
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|q| - 1` accepted by operations that require a unit quaternion.
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    /// Unit quaternion for a rotation of `angle` radians about `axis`.
    ///
    /// The result is normalized and has `w >= 0`.
    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        if !axis.iter().all(|v| v.is_finite()) || !angle.is_finite() {
            return Err(Error::InvalidInput("non-finite axis-angle".into()));
        }
        let n = axis.norm();
        if n == 0.0 {
            return Err(Error::InvalidInput("zero rotation axis".into()));
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let v = axis * (s / n);
        Ok(Self::new(v.x, v.y, v.z, c).canonical())
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn scalar(&self) -> f64 {
        self.w
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Vector part negated.
    pub fn conjugate(&self) -> Self {
        Self::new(-self.x, -self.y, -self.z, self.w)
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.x, -self.y, -self.z, -self.w)
    }

    /// Representative of the same rotation with `w >= 0`.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            self.negated()
        } else {
            *self
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cannot normalize quaternion with norm {n}"
            )));
        }
        Ok(Self::new(self.x / n, self.y / n, self.z / n, self.w / n))
    }

    /// Hamilton product `[r1 v2 + r2 v1 + v1 x v2, r1 r2 - v1 . v2]`.
    pub fn multiply(&self, rhs: &Quaternion) -> Quaternion {
        let v1 = self.vector();
        let v2 = rhs.vector();
        let (r1, r2) = (self.w, rhs.w);
        let v = v2 * r1 + v1 * r2 + v1.cross(&v2);
        Quaternion::new(v.x, v.y, v.z, r1 * r2 - v1.dot(&v2))
    }

    /// Rotates `x` as the pure quaternion product `q x q̄`.
    pub fn rotate_vector(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let p = Quaternion::new(x.x, x.y, x.z, 0.0);
        self.multiply(&p).multiply(&self.conjugate()).vector()
    }

    pub fn to_rotation_matrix(&self) -> RotationMatrix {
        let Quaternion { x, y, z, w } = *self;
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        );
        RotationMatrix(m)
    }

    /// Unit quaternion of a rotation matrix (Shepperd's method), `w >= 0`.
    pub fn from_rotation_matrix(r: &RotationMatrix) -> Result<Self> {
        r.validate()?;
        let m = &r.0;
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            Quaternion::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
                0.25 * s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(2, 1)] - m[(1, 2)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        };
        Ok(q.normalized()?.canonical())
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.multiply(&rhs)
    }
}

/// Axis scaled by rotation angle, radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMapVector(pub Vector3<f64>);

impl ExpMapVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Same rotation with magnitude reduced into `[0, π]`, flipping the
    /// axis when the reduced angle exceeds π.
    pub fn canonical(&self) -> Self {
        let theta = self.0.norm();
        if theta == 0.0 || !theta.is_finite() {
            return *self;
        }
        let axis = self.0 / theta;
        let reduced = theta.rem_euclid(TAU);
        if reduced > PI {
            Self(-axis * (TAU - reduced))
        } else {
            Self(axis * reduced)
        }
    }
}

/// `e^v`: `[sin(|v|/2) v/|v|, cos(|v|/2)]`, identity for `v = 0`.
///
/// The result is returned with `w >= 0`.
pub fn expmap_to_quat(v: &ExpMapVector) -> Result<Quaternion> {
    if !v.0.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidInput("non-finite exponential map".into()));
    }
    let theta = v.0.norm();
    if theta == 0.0 {
        return Ok(Quaternion::IDENTITY);
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let axis = v.0 * (s / theta);
    Ok(Quaternion::new(axis.x, axis.y, axis.z, c).canonical())
}

/// Inverse of [`expmap_to_quat`] with the angle in `[0, π]`.
pub fn quat_to_expmap(q: &Quaternion) -> Result<ExpMapVector> {
    if !q.is_finite() {
        return Err(Error::InvalidInput("non-finite quaternion".into()));
    }
    let n = q.norm();
    if n == 0.0 {
        return Err(Error::InvalidInput("zero-norm quaternion".into()));
    }
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::InvalidInput(format!("quaternion is not unit norm (|q| = {n})")));
    }
    let q = q.canonical();
    let v = q.vector() / n;
    let s = v.norm();
    if s == 0.0 {
        return Ok(ExpMapVector::new(0.0, 0.0, 0.0));
    }
    // atan2 keeps precision near both ends, unlike 2 acos(w).
    let theta = 2.0 * s.atan2(q.w / n);
    Ok(ExpMapVector(v * (theta / s)))
}

pub fn quat_multiply(q1: &Quaternion, q2: &Quaternion) -> Quaternion {
    q1.multiply(q2)
}

pub fn quat_conjugate(q: &Quaternion) -> Quaternion {
    q.conjugate()
}

pub fn quat_rotate_vector(q: &Quaternion, x: &Vector3<f64>) -> Vector3<f64> {
    q.rotate_vector(x)
}

pub fn quat_to_rotmat(q: &Quaternion) -> RotationMatrix {
    q.to_rotation_matrix()
}

/// Proper rotation matrix acting on column vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(pub Matrix3<f64>);

impl RotationMatrix {
    /// Tolerance used when validating orthonormality of input matrices.
    pub const TOLERANCE: f64 = 1e-6;

    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.0.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite rotation matrix".into()));
        }
        let gram = self.0.transpose() * self.0;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > Self::TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "rotation matrix is not orthonormal (max |RᵀR - I| = {dev:e})"
            )));
        }
        let det = self.0.determinant();
        if (det - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidInput(format!("rotation matrix has determinant {det}")));
        }
        Ok(())
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}
