//! Exact 2-D convex-polygon primitives.
//!
//! Everything here is a pure function on immutable values. Polygons are
//! stored counter-clockwise and strictly convex; boundary contact counts as
//! intersection (closed-set semantics).

mod hull;
mod minkowski;
mod offset;
mod polygon;
mod sat;

pub use hull::convex_hull;
pub use minkowski::{minkowski_sum, minkowski_sum_points};
pub use offset::offset;
pub use polygon::{ellipse_polygon, rect_corners, rect_polygon, ConvexPolygon, RobotSpec};
pub use sat::{intersects, intersects_points};

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    /// Rotates by `angle` about the origin.
    #[inline]
    pub fn rotated(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    #[inline]
    pub fn dist(self, o: Self) -> T {
        (self - o).norm()
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Point2::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Point2::new(-self.x, -self.y)
    }
}

impl<T: Scalar> From<(T, T)> for Point2<T> {
    fn from((x, y): (T, T)) -> Self {
        Point2::new(x, y)
    }
}

/// Planar pose. Heading is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2<T> {
    pub x: T,
    pub y: T,
    pub phi: T,
}

impl<T: Scalar> Pose2<T> {
    pub fn new(x: T, y: T, phi: T) -> Self {
        Pose2 {
            x,
            y,
            phi: normalize_angle(phi),
        }
    }

    pub fn identity() -> Self {
        Pose2::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    /// Maps a point from this pose's local frame into the parent frame.
    #[inline]
    pub fn transform_point(&self, p: Point2<T>) -> Point2<T> {
        p.rotated(self.phi) + self.position()
    }

    /// Composition `self ∘ other`: `other` expressed in this frame, returned in the parent frame.
    pub fn compose(&self, other: &Pose2<T>) -> Pose2<T> {
        let p = self.transform_point(other.position());
        Pose2::new(p.x, p.y, self.phi + other.phi)
    }

    /// Expresses `other` (parent frame) in this pose's local frame.
    pub fn relative(&self, other: &Pose2<T>) -> Pose2<T> {
        let d = (other.position() - self.position()).rotated(-self.phi);
        Pose2::new(d.x, d.y, other.phi - self.phi)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle<T: Scalar>(a: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    if a > -pi && a <= pi {
        return a;
    }
    let mut r = a % two_pi;
    if r <= -pi {
        r += two_pi;
    } else if r > pi {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(7.5) - (7.5 - 2.0 * PI)).abs() < 1e-12);
        assert!((normalize_angle(-7.5) - (-7.5 + 2.0 * PI)).abs() < 1e-12);
        let p = Pose2::new(0.0, 0.0, -3.0 * PI);
        assert!(p.phi > -PI && p.phi <= PI);
    }

    #[test]
    fn relative_inverts_compose() {
        let a = Pose2::<f64>::new(1.0, -2.0, 0.7);
        let b = Pose2::new(0.3, 4.0, -2.5);
        let rel = a.relative(&a.compose(&b));
        assert!((rel.x - b.x).abs() < 1e-12);
        assert!((rel.y - b.y).abs() < 1e-12);
        assert!((rel.phi - b.phi).abs() < 1e-12);
    }
}
