//! Planar vectors, poses and the segment primitives used by paths and metrics.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::Real;

/// A 2D point or vector in meters (or m/s for velocities).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Vec2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector pointing along `heading` (radians, counter-clockwise from +x).
    #[inline]
    pub fn from_heading(heading: T) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` lies to the left of `self`.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn heading(self) -> T {
        self.y.atan2(self.x)
    }

    /// Returns `None` for (near) zero-length vectors.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::epsilon() {
            Some(self * (T::one() / n))
        } else {
            None
        }
    }

    /// Rotates by `angle` radians counter-clockwise.
    #[inline]
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn lerp(self, o: Self, t: T) -> Self {
        self + (o - self) * t
    }
}

impl<T: Real> Add for Vec2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Vec2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Vec2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Real> Neg for Vec2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Position plus heading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose<T> {
    pub position: Vec2<T>,
    pub yaw: T,
}

impl<T: Real> Pose<T> {
    pub fn new(position: Vec2<T>, yaw: T) -> Self {
        Self { position, yaw }
    }

    /// Expresses a world point in this pose's frame (x forward, y left).
    pub fn to_local(&self, p: Vec2<T>) -> Vec2<T> {
        (p - self.position).rotate(-self.yaw)
    }

    /// Expresses a world direction (no translation) in this pose's frame.
    pub fn dir_to_local(&self, v: Vec2<T>) -> Vec2<T> {
        v.rotate(-self.yaw)
    }
}

/// Closest point of segment `a..b` to `p`, as the clamped segment parameter in `[0, 1]`.
pub fn closest_param_on_segment<T: Real>(p: Vec2<T>, a: Vec2<T>, b: Vec2<T>) -> T {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq <= T::zero() {
        return T::zero();
    }
    ((p - a).dot(ab) / len_sq).max(T::zero()).min(T::one())
}

/// Proper (non-collinear) intersection of segments `p0..p1` and `q0..q1`.
///
/// Returns the parameters `(t, u)` along each segment, both in `[0, 1]`.
/// Parallel and collinear segments never intersect under this definition.
pub fn segment_intersection<T: Real>(
    p0: Vec2<T>,
    p1: Vec2<T>,
    q0: Vec2<T>,
    q1: Vec2<T>,
) -> Option<(T, T)> {
    let r = p1 - p0;
    let s = q1 - q0;
    let denom = r.cross(s);
    let scale = r.norm() * s.norm();
    if denom.abs() <= scale * T::epsilon() * T::lit(16.0) {
        return None;
    }
    let qp = q0 - p0;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let zero = T::zero();
    let one = T::one();
    if t >= zero && t <= one && u >= zero && u <= one {
        Some((t, u))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_frame_transform() {
        let pose = Pose::new(Vec2::new(1.0, 2.0), std::f64::consts::FRAC_PI_2);
        let local = pose.to_local(Vec2::new(1.0, 22.0));
        assert!((local.x - 20.0).abs() < 1e-12);
        assert!(local.y.abs() < 1e-12);
    }

    #[test]
    fn crossing_segments() {
        let (t, u) = segment_intersection(
            Vec2::new(-1.0f64, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, -2.0),
            Vec2::new(0.0, 2.0),
        )
        .unwrap();
        assert!((t - 0.5).abs() < 1e-15);
        assert!((u - 0.5).abs() < 1e-15);
    }

    #[test]
    fn collinear_segments_do_not_intersect() {
        assert!(segment_intersection(
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(3.0, 0.0),
        )
        .is_none());
    }

    #[test]
    fn closest_param_clamps() {
        let a = Vec2::new(0.0f32, 0.0);
        let b = Vec2::new(10.0, 0.0);
        assert_eq!(closest_param_on_segment(Vec2::new(-5.0, 1.0), a, b), 0.0);
        assert_eq!(closest_param_on_segment(Vec2::new(15.0, 1.0), a, b), 1.0);
        assert_eq!(closest_param_on_segment(Vec2::new(2.5, 1.0), a, b), 0.25);
    }
}
