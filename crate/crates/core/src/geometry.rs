//! Planar points, boxes and triangle helpers.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{FdlmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, rhs: Point2) -> Point2 {
        Point2::new(self * rhs.x, self * rhs.y)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min: Point2,
    pub max: Point2,
}

impl BBox {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn empty() -> Self {
        Self {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn square(half_width: f64) -> Self {
        Self::new(
            Point2::new(-half_width, -half_width),
            Point2::new(half_width, half_width),
        )
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.extend(*p);
        }
        b
    }

    pub fn extend(&mut self, p: Point2) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self::new(
            Point2::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            Point2::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        )
    }

    pub fn inflate(&self, eps: f64) -> Self {
        Self::new(
            Point2::new(self.min.x - eps, self.min.y - eps),
            Point2::new(self.max.x + eps, self.max.y + eps),
        )
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        self.min.midpoint(self.max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.width() > 0.0
            && self.height() > 0.0;
        if ok {
            Ok(())
        } else {
            Err(FdlmError::invalid(format!("degenerate box {self:?}")))
        }
    }
}

/// A closed disk, used as the immersed domain of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGeometry {
    pub center: Point2,
    pub radius: f64,
}

impl DiskGeometry {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || !center.is_finite() {
            return Err(FdlmError::invalid(format!(
                "disk needs a finite center and radius > 0, got radius {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn unit() -> Self {
        Self {
            center: Point2::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    /// Radial projection of `p` onto the circle.
    pub fn project(&self, p: Point2) -> Point2 {
        let d = p - self.center;
        let r = d.norm();
        if r == 0.0 {
            return p;
        }
        self.center + (self.radius / r) * d
    }

    pub fn contains(&self, p: Point2) -> bool {
        (p - self.center).norm() <= self.radius
    }

    /// Whether the closed disk lies strictly inside `bbox`.
    pub fn inside(&self, bbox: &BBox) -> bool {
        self.center.x - self.radius > bbox.min.x
            && self.center.x + self.radius < bbox.max.x
            && self.center.y - self.radius > bbox.min.y
            && self.center.y + self.radius < bbox.max.y
    }
}

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(t: &[Point2; 3]) -> f64 {
    0.5 * orient(t[0], t[1], t[2])
}

pub fn triangle_diameter(t: &[Point2; 3]) -> f64 {
    t[0].dist(t[1]).max(t[1].dist(t[2])).max(t[2].dist(t[0]))
}

/// Barycentric coordinates of `p` with respect to triangle `t`.
pub fn barycentric(t: &[Point2; 3], p: Point2) -> [f64; 3] {
    let det = orient(t[0], t[1], t[2]);
    let l1 = orient(p, t[1], t[2]) / det;
    let l2 = orient(t[0], p, t[2]) / det;
    [l1, l2, 1.0 - l1 - l2]
}

/// Smallest interior angle of a triangle, in radians.
pub fn min_angle(t: &[Point2; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..3 {
        let a = t[i];
        let u = t[(i + 1) % 3] - a;
        let v = t[(i + 2) % 3] - a;
        let ang = u.cross(v).abs().atan2(u.dot(v));
        best = best.min(ang);
    }
    best
}

/// Shoelace area of a closed polygon (counterclockwise positive).
pub fn polygon_area(pts: &[Point2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * s
}
