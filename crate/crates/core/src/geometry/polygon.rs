use serde::{Deserialize, Serialize};

use super::{Point2, Pose2};
use crate::error::{DcpfError, Result};
use crate::scalar::Scalar;

/// Strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2<T>>", into = "Vec<Point2<T>>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct ConvexPolygon<T> {
    vertices: Vec<Point2<T>>,
}

impl<T: Scalar> TryFrom<Vec<Point2<T>>> for ConvexPolygon<T> {
    type Error = DcpfError;
    fn try_from(v: Vec<Point2<T>>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl<T: Scalar> From<ConvexPolygon<T>> for Vec<Point2<T>> {
    fn from(p: ConvexPolygon<T>) -> Self {
        p.vertices
    }
}

impl<T: Scalar> ConvexPolygon<T> {
    /// Builds a polygon from vertices in either winding order.
    ///
    /// Near-duplicate vertices are merged and collinear vertices dropped
    /// (tolerance [`Scalar::GEOM_TOL`]). Fails if fewer than three vertices
    /// remain, the area vanishes, or the outline is not convex.
    pub fn new(vertices: Vec<Point2<T>>) -> Result<Self> {
        let tol = T::GEOM_TOL;
        let mut v = dedup_ring(vertices, tol);
        if v.len() < 3 {
            return Err(DcpfError::DegenerateInput(format!(
                "polygon needs at least 3 distinct vertices, got {}",
                v.len()
            )));
        }
        if signed_area(&v) < T::zero() {
            v.reverse();
        }
        let v = drop_collinear(v, tol);
        if v.len() < 3 {
            return Err(DcpfError::DegenerateInput(
                "polygon vertices are collinear".into(),
            ));
        }
        let n = v.len();
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            let c = v[(i + 2) % n];
            if (b - a).cross(c - b) <= T::zero() {
                return Err(DcpfError::invalid("polygon is not convex"));
            }
        }
        Ok(ConvexPolygon { vertices: v })
    }

    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2<T>>) -> Self {
        ConvexPolygon { vertices }
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> T {
        signed_area(&self.vertices)
    }

    /// Closed point-membership test.
    pub fn contains_point(&self, p: Point2<T>) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b - a;
            // signed distance of p to the edge line, positive inside
            e.cross(p - a) >= -T::GEOM_TOL * e.norm()
        })
    }

    pub fn contains_polygon(&self, other: &ConvexPolygon<T>) -> bool {
        other.vertices.iter().all(|&p| self.contains_point(p))
    }

    pub fn translated(&self, d: Point2<T>) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&p| p + d).collect(),
        }
    }

    /// Applies a rigid transform (rotation then translation).
    pub fn transformed(&self, pose: &Pose2<T>) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&p| pose.transform_point(p)).collect(),
        }
    }

    /// Point reflection through the origin, `{-p : p ∈ self}`.
    pub fn reflected(&self) -> Self {
        ConvexPolygon {
            vertices: self.vertices.iter().map(|&p| -p).collect(),
        }
    }

    /// Axis-aligned bounds as `(min, max)`.
    pub fn bounds(&self) -> (Point2<T>, Point2<T>) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn perimeter(&self) -> T {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Point at arc-length fraction `u ∈ [0, 1)` along the boundary, starting at vertex 0.
    pub fn boundary_point(&self, u: T) -> Point2<T> {
        let n = self.vertices.len();
        let mut target = u * self.perimeter();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let len = a.dist(b);
            if target <= len || i == n - 1 {
                let t = if len > T::zero() { (target / len).min(T::one()) } else { T::zero() };
                return a + (b - a) * t;
            }
            target -= len;
        }
        self.vertices[0]
    }
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub(crate) fn signed_area<T: Scalar>(v: &[Point2<T>]) -> T {
    let n = v.len();
    let mut s = T::zero();
    for i in 0..n {
        s += v[i].cross(v[(i + 1) % n]);
    }
    s * T::of(0.5)
}

fn dedup_ring<T: Scalar>(vertices: Vec<Point2<T>>, tol: T) -> Vec<Point2<T>> {
    let mut out: Vec<Point2<T>> = Vec::with_capacity(vertices.len());
    for p in vertices {
        if out.last().is_none_or(|&q| q.dist(p) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= tol {
        out.pop();
    }
    out
}

fn drop_collinear<T: Scalar>(mut v: Vec<Point2<T>>, tol: T) -> Vec<Point2<T>> {
    loop {
        let n = v.len();
        if n < 3 {
            return v;
        }
        let mut removed = false;
        let mut i = 0;
        while i < v.len() && v.len() >= 3 {
            let n = v.len();
            let prev = v[(i + n - 1) % n];
            let cur = v[i];
            let next = v[(i + 1) % n];
            let base = next - prev;
            let len = base.norm();
            // distance of `cur` from the chord prev→next
            let dist = if len > T::zero() {
                base.cross(cur - prev).abs() / len
            } else {
                T::zero()
            };
            if dist <= tol && (cur - prev).dot(next - cur) >= T::zero() {
                v.remove(i);
                removed = true;
            } else {
                i += 1;
            }
        }
        if !removed {
            return v;
        }
    }
}

/// Corners of an `l1 × l2` rectangle centered at `pose`, counter-clockwise.
///
/// `l1` runs along the local x axis and `l2` along local y.
#[inline]
pub fn rect_corners<T: Scalar>(l1: T, l2: T, pose: &Pose2<T>) -> [Point2<T>; 4] {
    let half = T::of(0.5);
    let a = l1 * half;
    let b = l2 * half;
    let (s, c) = pose.phi.sin_cos();
    let ax = Point2::new(c * a, s * a);
    let ay = Point2::new(-s * b, c * b);
    let o = pose.position();
    [o - ax - ay, o + ax - ay, o + ax + ay, o - ax + ay]
}

pub fn rect_polygon<T: Scalar>(l1: T, l2: T, pose: &Pose2<T>) -> Result<ConvexPolygon<T>> {
    if !(l1 > T::zero() && l2 > T::zero()) {
        return Err(DcpfError::invalid(format!(
            "rectangle sides must be positive, got {l1} x {l2}"
        )));
    }
    Ok(ConvexPolygon::from_ccw_unchecked(
        rect_corners(l1, l2, pose).to_vec(),
    ))
}

/// Inscribed `n`-gon of the axis-aligned ellipse with semi-axes `rx`, `ry`.
pub fn ellipse_polygon<T: Scalar>(rx: T, ry: T, n: usize) -> Result<ConvexPolygon<T>> {
    if n < 8 {
        return Err(DcpfError::invalid(format!("ellipse needs n >= 8, got {n}")));
    }
    if !(rx > T::zero() && ry > T::zero()) {
        return Err(DcpfError::invalid("ellipse semi-axes must be positive"));
    }
    let step = T::of(2.0 * std::f64::consts::PI / n as f64);
    let vertices = (0..n)
        .map(|k| {
            let (s, c) = (step * T::of(k as f64)).sin_cos();
            Point2::new(rx * c, ry * s)
        })
        .collect();
    Ok(ConvexPolygon::from_ccw_unchecked(vertices))
}

/// Rectangular robot footprint and bicycle-model wheelbase.
///
/// `width` is the extent along the heading direction, `height` across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec<T = f64> {
    pub width: T,
    pub height: T,
    pub wheelbase: T,
}

impl<T: Scalar> RobotSpec<T> {
    pub fn new(width: T, height: T, wheelbase: T) -> Result<Self> {
        let spec = RobotSpec {
            width,
            height,
            wheelbase,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width > T::zero() && self.height > T::zero() && self.wheelbase > T::zero() {
            Ok(())
        } else {
            Err(DcpfError::invalid("robot dimensions must be positive"))
        }
    }

    pub fn footprint(&self, pose: &Pose2<T>) -> ConvexPolygon<T> {
        ConvexPolygon::from_ccw_unchecked(rect_corners(self.width, self.height, pose).to_vec())
    }
}

impl Default for RobotSpec<f64> {
    /// Passenger-car footprint, 4.07 m × 1.74 m.
    fn default() -> Self {
        RobotSpec {
            width: 4.07,
            height: 1.74,
            wheelbase: 2.7,
        }
    }
}
