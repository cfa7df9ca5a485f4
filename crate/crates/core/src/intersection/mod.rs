//! Geometric kernel for non-matching grids: spatial index, point location,
//! convex clipping and the decomposition of immersed cells into polygons that
//! each lie in a single background cell.

mod clip;
mod index;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

pub use clip::{clip, fan_triangulate, ConvexPolygon, MERGE_TOL};
pub use index::{locate_point, BoxIndex, CONTAINMENT_TOL};

use crate::error::{FdlmError, Result};
use crate::geometry::{triangle_area, BBox, Point2};
use crate::mesh::Mesh;

/// Polygons smaller than this fraction of their immersed cell are dropped.
pub const SLIVER_TOL: f64 = 1e-14;

/// One polygon of an immersed cell together with the background cell hosting it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub polygon: ConvexPolygon,
    pub host: usize,
}

/// Decomposes the immersed triangle `e2` against the background mesh.
pub fn intersect_element(e2: &[Point2; 3], bg: &Mesh, index: &BoxIndex) -> Result<Vec<Piece>> {
    let outside: Vec<Point2> = e2
        .iter()
        .copied()
        .filter(|&p| locate_point(index, bg, p).is_none())
        .collect();
    if !outside.is_empty() {
        return Err(FdlmError::domain(
            "immersed cell is not contained in the background mesh",
            outside,
        ));
    }
    let area = triangle_area(e2);
    let mut out = Vec::new();
    for host in index.query_box(&BBox::from_points(e2.iter())) {
        let polygon = clip(e2, &bg.triangle(host));
        if !polygon.is_empty() && polygon.area() > SLIVER_TOL * area {
            out.push(Piece { polygon, host });
        }
    }
    Ok(out)
}

/// For every immersed cell, its polygons and their host background cells.
#[derive(Debug, Clone)]
pub struct IntersectionMap {
    pieces: Vec<Vec<Piece>>,
    /// `(immersed cell, piece index)` pairs hosted by each background cell.
    by_host: Vec<Vec<(usize, usize)>>,
}

impl IntersectionMap {
    /// Intersects every cell of `immersed` with `bg`. Cells are processed in
    /// parallel; the result does not depend on the schedule.
    pub fn build(immersed: &Mesh, bg: &Mesh, index: &BoxIndex) -> Result<Self> {
        let pieces = (0..immersed.num_cells())
            .into_par_iter()
            .map(|c| intersect_element(&immersed.triangle(c), bg, index))
            .collect::<Result<Vec<_>>>()?;
        let mut by_host = vec![Vec::new(); bg.num_cells()];
        for (e2, list) in pieces.iter().enumerate() {
            for (k, p) in list.iter().enumerate() {
                by_host[p.host].push((e2, k));
            }
        }
        Ok(Self { pieces, by_host })
    }

    pub fn num_immersed(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self, e2: usize) -> &[Piece] {
        &self.pieces[e2]
    }

    pub fn hosted(&self, bg_cell: usize) -> &[(usize, usize)] {
        &self.by_host[bg_cell]
    }

    pub fn piece(&self, e2: usize, k: usize) -> &Piece {
        &self.pieces[e2][k]
    }

    /// Total area of the polygons hosted by a background cell.
    pub fn covered_area(&self, bg_cell: usize) -> f64 {
        self.by_host[bg_cell]
            .iter()
            .map(|&(e2, k)| self.pieces[e2][k].polygon.area())
            .sum()
    }

    /// `|Σ area(P_j) − area(E₂)| / area(E₂)` for one immersed cell.
    pub fn area_defect(&self, immersed: &Mesh, e2: usize) -> f64 {
        let a = immersed.cell_area(e2);
        let s: f64 = self.pieces[e2].iter().map(|p| p.polygon.area()).sum();
        (s - a).abs() / a
    }

    pub fn max_area_defect(&self, immersed: &Mesh) -> f64 {
        (0..self.pieces.len())
            .map(|e| self.area_defect(immersed, e))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.pieces
            .iter()
            .flatten()
            .map(|p| p.polygon.area())
            .sum()
    }

    /// CSV dump with columns `e2_id,host_id,area,vertices`; vertices are
    /// `x y` pairs separated by `;`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("e2_id,host_id,area,vertices\n");
        for (e2, list) in self.pieces.iter().enumerate() {
            for p in list {
                let verts: Vec<String> = p
                    .polygon
                    .vertices()
                    .iter()
                    .map(|v| format!("{:.17e} {:.17e}", v.x, v.y))
                    .collect();
                let _ = writeln!(
                    s,
                    "{},{},{:.17e},{}",
                    e2,
                    p.host,
                    p.polygon.area(),
                    verts.join(";")
                );
            }
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}
