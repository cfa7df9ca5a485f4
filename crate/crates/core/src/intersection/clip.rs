//! Convex polygons, triangle–triangle clipping and fan triangulation.

use serde::Serialize;

use crate::error::{FdlmError, Result};
use crate::geometry::{orient, polygon_area, Point2};

/// Vertices closer than this are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Counterclockwise convex polygon; empty when it has no vertices.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Cleans up `pts` (merging near-duplicates); returns the empty polygon
    /// when fewer than three vertices or no positive area remain.
    pub fn from_ccw(pts: Vec<Point2>) -> Self {
        let mut out: Vec<Point2> = Vec::with_capacity(pts.len());
        for p in pts {
            if out.last().is_none_or(|q| q.dist(p) > MERGE_TOL) {
                out.push(p);
            }
        }
        while out.len() > 1 && out[0].dist(*out.last().unwrap()) <= MERGE_TOL {
            out.pop();
        }
        if out.len() < 3 || !(polygon_area(&out) > 0.0) {
            return Self::empty();
        }
        Self { vertices: out }
    }

    pub fn triangle(t: &[Point2; 3]) -> Self {
        Self::from_ccw(t.to_vec())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.vertices)
    }

    /// Average of the vertices; lies inside the polygon by convexity.
    pub fn vertex_centroid(&self) -> Point2 {
        let n = self.vertices.len() as f64;
        let s = self
            .vertices
            .iter()
            .fold(Point2::default(), |acc, &p| acc + p);
        (1.0 / n) * s
    }

    /// Area centroid.
    pub fn centroid(&self) -> Point2 {
        let g = self.vertex_centroid();
        let mut acc = Point2::default();
        let mut area = 0.0;
        for t in fan(self, g) {
            let a = 0.5 * orient(t[0], t[1], t[2]);
            acc = acc + (a / 3.0) * (t[0] + t[1] + t[2]);
            area += a;
        }
        (1.0 / area) * acc
    }
}

/// Intersection of two counterclockwise triangles: the first one is clipped
/// successively against the three edge half-planes of the second.
pub fn clip(immersed: &[Point2; 3], background: &[Point2; 3]) -> ConvexPolygon {
    let mut poly: Vec<Point2> = immersed.to_vec();
    let mut next = Vec::with_capacity(9);
    for i in 0..3 {
        let a = background[i];
        let b = background[(i + 1) % 3];
        next.clear();
        let n = poly.len();
        for k in 0..n {
            let p = poly[k];
            let q = poly[(k + 1) % n];
            let sp = orient(a, b, p);
            let sq = orient(a, b, q);
            if sp >= 0.0 {
                next.push(p);
            }
            if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
                let t = sp / (sp - sq);
                next.push(p + t * (q - p));
            }
        }
        std::mem::swap(&mut poly, &mut next);
        if poly.len() < 3 {
            return ConvexPolygon::empty();
        }
    }
    ConvexPolygon::from_ccw(poly)
}

fn fan(poly: &ConvexPolygon, g: Point2) -> impl Iterator<Item = [Point2; 3]> + '_ {
    let v = &poly.vertices;
    (0..v.len()).map(move |i| [g, v[i], v[(i + 1) % v.len()]])
}

/// Splits a convex polygon into triangles: a triangle is returned as is,
/// larger polygons are fanned from their vertex centroid.
pub fn fan_triangulate(poly: &ConvexPolygon) -> Result<Vec<[Point2; 3]>> {
    match poly.vertices.len() {
        0 => Err(FdlmError::invalid("cannot triangulate an empty polygon")),
        3 => Ok(vec![[poly.vertices[0], poly.vertices[1], poly.vertices[2]]]),
        _ => Ok(fan(poly, poly.vertex_centroid()).collect()),
    }
}
