//! Planar geometry primitives used by the image-method tracer.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tolerance (meters) for on-segment and collinearity decisions.
pub const GEOMETRY_EPS: f64 = 1e-9;

/// A point in the plane, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// A reflecting line segment with a complex (dimensionless) reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub start: Point,
    pub end: Point,
    #[serde(with = "crate::complex_pair")]
    pub reflection: Complex64,
}

impl Wall {
    pub fn new(start: Point, end: Point, reflection: Complex64) -> Self {
        Wall { start, end, reflection }
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    fn direction(&self) -> Point {
        self.end - self.start
    }

    /// Signed distance of `p` from the wall's supporting line.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.direction();
        d.cross(p - self.start) / d.norm()
    }

    /// Mirror image of `p` across the wall's supporting line.
    pub fn mirror(&self, p: Point) -> Point {
        let d = self.direction();
        let t = (p - self.start).dot(d) / d.dot(d);
        let foot = self.start + d * t;
        foot * 2.0 - p
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let d = self.direction();
        let t = ((p - self.start).dot(d) / d.dot(d)).clamp(0.0, 1.0);
        p.distance(self.start + d * t)
    }

    /// Intersection of segment `a → b` with this wall.
    ///
    /// Returns `(t, point)` where `t ∈ [0, 1]` is the parameter along `a → b`;
    /// the point must fall on the closed wall segment (within tolerance).
    /// Parallel configurations return `None`.
    pub fn intersect(&self, a: Point, b: Point) -> Option<(f64, Point)> {
        let r = b - a;
        let s = self.direction();
        let denom = r.cross(s);
        if denom.abs() <= f64::EPSILON * r.norm() * s.norm() {
            return None;
        }
        let qp = self.start - a;
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        let u_tol = GEOMETRY_EPS / s.norm();
        if (-u_tol..=1.0 + u_tol).contains(&u) && (0.0..=1.0).contains(&t) {
            Some((t, a + r * t))
        } else {
            None
        }
    }
}
