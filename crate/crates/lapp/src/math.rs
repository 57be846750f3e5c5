//! Minimal 3-D linear algebra: vectors, rotation matrices, quaternions, and
//! rigid transforms, generic over the scalar type.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::num::Real;

/// 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec3<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn splat(v: S) -> Self {
        Self::new(v, v, v)
    }

    pub fn of(x: f64, y: f64, z: f64) -> Self {
        Self::new(S::of(x), S::of(y), S::of(z))
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or zero if the norm is below `eps`.
    pub fn normalized_or_zero(self, eps: S) -> Self {
        let n = self.norm();
        if n <= eps {
            Self::zero()
        } else {
            self / n
        }
    }

    pub fn min_component(self) -> S {
        self.x.min(self.y).min(self.z)
    }

    pub fn abs(self) -> Self {
        Self::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn clamp(self, lo: Self, hi: Self) -> Self {
        Self::new(
            self.x.max(lo.x).min(hi.x),
            self.y.max(lo.y).min(hi.y),
            self.z.max(lo.z).min(hi.z),
        )
    }

    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }
}

impl<S: Real> Add for Vec3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Real> AddAssign for Vec3<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Real> Sub for Vec3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Real> Mul<S> for Vec3<S> {
    type Output = Self;
    fn mul(self, s: S) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<S: Real> Div<S> for Vec3<S> {
    type Output = Self;
    fn div(self, s: S) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<S: Real> Neg for Vec3<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3<S> {
    pub m: [[S; 3]; 3],
}

impl<S: Real> Mat3<S> {
    pub fn identity() -> Self {
        let o = S::one();
        let z = S::zero();
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    /// Rodrigues formula; `axis` must be unit length.
    pub fn from_axis_angle(axis: Vec3<S>, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        let t = S::one() - c;
        let (x, y, z) = (axis.x, axis.y, axis.z);
        Self {
            m: [
                [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
                [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
                [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
            ],
        }
    }

    pub fn from_yaw(angle: S) -> Self {
        Self::from_axis_angle(Vec3::new(S::zero(), S::zero(), S::one()), angle)
    }

    pub fn transpose(self) -> Self {
        let m = self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn mul_vec(self, v: Vec3<S>) -> Vec3<S> {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }

    pub fn mul_mat(self, o: Self) -> Self {
        let mut r = [[S::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        Self { m: r }
    }

    pub fn col(self, j: usize) -> Vec3<S> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }
}

/// Unit quaternion, stored `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quat<S> {
    pub w: S,
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Quat<S> {
    pub fn identity() -> Self {
        Self {
            w: S::one(),
            x: S::zero(),
            y: S::zero(),
            z: S::zero(),
        }
    }

    pub fn from_axis_angle(axis: Vec3<S>, angle: S) -> Self {
        let half = angle / S::of(2.0);
        let (s, c) = half.sin_cos();
        Self {
            w: c,
            x: axis.x * s,
            y: axis.y * s,
            z: axis.z * s,
        }
    }

    pub fn from_yaw(angle: S) -> Self {
        Self::from_axis_angle(Vec3::new(S::zero(), S::zero(), S::one()), angle)
    }

    pub fn to_mat3(self) -> Mat3<S> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let two = S::of(2.0);
        let o = S::one();
        Mat3 {
            m: [
                [
                    o - two * (y * y + z * z),
                    two * (x * y - w * z),
                    two * (x * z + w * y),
                ],
                [
                    two * (x * y + w * z),
                    o - two * (x * x + z * z),
                    two * (y * z - w * x),
                ],
                [
                    two * (x * z - w * y),
                    two * (y * z + w * x),
                    o - two * (x * x + y * y),
                ],
            ],
        }
    }
}

/// Rigid transform: `p_world = rot * p_local + trans`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iso3<S> {
    pub rot: Mat3<S>,
    pub trans: Vec3<S>,
}

impl<S: Real> Iso3<S> {
    pub fn identity() -> Self {
        Self {
            rot: Mat3::identity(),
            trans: Vec3::zero(),
        }
    }

    pub fn translation(x: S, y: S, z: S) -> Self {
        Self {
            rot: Mat3::identity(),
            trans: Vec3::new(x, y, z),
        }
    }

    pub fn new(rot: Mat3<S>, trans: Vec3<S>) -> Self {
        Self { rot, trans }
    }

    pub fn compose(self, o: Self) -> Self {
        Self {
            rot: self.rot.mul_mat(o.rot),
            trans: self.rot.mul_vec(o.trans) + self.trans,
        }
    }

    pub fn transform_point(self, p: Vec3<S>) -> Vec3<S> {
        self.rot.mul_vec(p) + self.trans
    }

    pub fn transform_vector(self, v: Vec3<S>) -> Vec3<S> {
        self.rot.mul_vec(v)
    }

    pub fn inverse(self) -> Self {
        let rt = self.rot.transpose();
        Self {
            rot: rt,
            trans: -rt.mul_vec(self.trans),
        }
    }
}

/// Closest point on segment `[a, b]` to `p`, returned as the clamp parameter.
pub fn segment_param_to_point<S: Real>(a: Vec3<S>, b: Vec3<S>, p: Vec3<S>) -> S {
    let ab = b - a;
    let denom = ab.norm_sq();
    if denom <= S::epsilon() {
        return S::zero();
    }
    ((p - a).dot(ab) / denom).max(S::zero()).min(S::one())
}

/// Closest-point parameters `(s, t)` between segments `[p1,q1]` and `[p2,q2]`.
///
/// Robust clamped form (handles degenerate and parallel segments).
pub fn closest_params_segment_segment<S: Real>(
    p1: Vec3<S>,
    q1: Vec3<S>,
    p2: Vec3<S>,
    q2: Vec3<S>,
) -> (S, S) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(r);
    let eps = S::epsilon();

    if a <= eps && e <= eps {
        return (S::zero(), S::zero());
    }
    if a <= eps {
        return (S::zero(), (f / e).max(S::zero()).min(S::one()));
    }
    let c = d1.dot(r);
    if e <= eps {
        return ((-c / a).max(S::zero()).min(S::one()), S::zero());
    }

    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let mut s = if denom > eps {
        ((b * f - c * e) / denom).max(S::zero()).min(S::one())
    } else {
        S::zero()
    };
    let mut t = (b * s + f) / e;
    if t < S::zero() {
        t = S::zero();
        s = (-c / a).max(S::zero()).min(S::one());
    } else if t > S::one() {
        t = S::one();
        s = ((b - c) / a).max(S::zero()).min(S::one());
    }
    (s, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_angle_rotates_x_to_y() {
        let r = Mat3::<f64>::from_yaw(std::f64::consts::FRAC_PI_2);
        let v = r.mul_vec(Vec3::new(1.0, 0.0, 0.0));
        assert!((v.x).abs() < 1e-15);
        assert!((v.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quat_matches_matrix() {
        let axis = Vec3::new(0.0, 1.0, 0.0);
        let q = Quat::<f64>::from_axis_angle(axis, 0.7);
        let m = Mat3::from_axis_angle(axis, 0.7);
        for i in 0..3 {
            for j in 0..3 {
                assert!((q.to_mat3().m[i][j] - m.m[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn iso_compose_inverse() {
        let a = Iso3::new(Mat3::<f64>::from_yaw(0.3), Vec3::new(1.0, 2.0, 3.0));
        let p = Vec3::new(0.5, -0.2, 0.1);
        let q = a.inverse().transform_point(a.transform_point(p));
        assert!((q - p).norm() < 1e-14);
    }

    #[test]
    fn segment_segment_parallel() {
        let (s, t) = closest_params_segment_segment::<f64>(
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        );
        let p1 = Vec3::new(s, 0.0, 0.0);
        let p2 = Vec3::new(t, 1.0, 0.0);
        assert!(((p1 - p2).norm() - 1.0).abs() < 1e-14);
    }
}
