//! Conforming triangulations of the background box and of the immersed domain.
//!
//! A [`Mesh`] is immutable: refinement ([`uniform_refine`], [`bisect`]) builds a
//! new mesh. Every cell is stored counterclockwise together with the local
//! index of its refinement edge (the edge opposite that local vertex), which is
//! the bookkeeping newest-vertex bisection needs.

mod refine;
pub mod vtk;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{FdlmError, Result};
use crate::geometry::{orient, triangle_area, triangle_diameter, BBox, DiskGeometry, Point2};

pub use refine::{bisect, uniform_refine, uniform_refine_with_parents, Refinement};

/// Marker carried by every edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeFlag {
    Interior,
    /// Part of the outer boundary of the background box.
    OuterBoundary,
    /// Part of the interface, i.e. the boundary of the immersed domain.
    Interface,
}

/// Which flag the boundary edges of a mesh receive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryRole {
    Outer,
    Interface,
}

impl BoundaryRole {
    fn flag(self) -> EdgeFlag {
        match self {
            BoundaryRole::Outer => EdgeFlag::OuterBoundary,
            BoundaryRole::Interface => EdgeFlag::Interface,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub vertices: [usize; 2],
    /// Incident cells; the second one is `None` on the boundary.
    pub cells: [Option<usize>; 2],
    pub flag: EdgeFlag,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    generation: Vec<u32>,
    role: BoundaryRole,
    /// Boundary vertices created by refinement are projected onto this circle.
    snap: Option<DiskGeometry>,
    edges: Vec<Edge>,
    /// `cell_edges[c][i]` is the edge opposite local vertex `i`.
    cell_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,
}

impl Mesh {
    /// Builds a mesh, choosing the longest edge of every cell as its
    /// refinement edge (ties go to the edge with the lexicographically smallest
    /// sorted vertex pair).
    pub fn new(
        vertices: Vec<Point2>,
        cells: Vec<[usize; 3]>,
        role: BoundaryRole,
        snap: Option<DiskGeometry>,
    ) -> Result<Self> {
        let refinement_edge = cells
            .iter()
            .map(|c| longest_edge(&vertices, c))
            .collect::<Result<Vec<_>>>()?;
        let generation = vec![0; cells.len()];
        Self::from_parts(vertices, cells, refinement_edge, generation, role, snap)
    }

    pub(crate) fn from_parts(
        vertices: Vec<Point2>,
        cells: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
        generation: Vec<u32>,
        role: BoundaryRole,
        snap: Option<DiskGeometry>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(FdlmError::invalid("mesh without cells"));
        }
        for (i, c) in cells.iter().enumerate() {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(FdlmError::invalid(format!("cell {i} references a missing vertex")));
            }
            let a = orient(vertices[c[0]], vertices[c[1]], vertices[c[2]]);
            if !(a > 0.0) {
                return Err(FdlmError::invalid(format!(
                    "cell {i} has non-positive signed area {}",
                    0.5 * a
                )));
            }
        }
        let (edges, cell_edges) = build_edges(&cells, role)?;
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in &edges {
            if e.is_boundary() {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }
        Ok(Self {
            vertices,
            cells,
            refinement_edge,
            generation,
            role,
            snap,
            edges,
            cell_edges,
            boundary_vertex,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_edges(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn refinement_edge(&self, cell: usize) -> u8 {
        self.refinement_edge[cell]
    }

    pub fn generation(&self, cell: usize) -> u32 {
        self.generation[cell]
    }

    pub fn boundary_role(&self) -> BoundaryRole {
        self.role
    }

    pub fn snap_disk(&self) -> Option<DiskGeometry> {
        self.snap
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn triangle(&self, cell: usize) -> [Point2; 3] {
        let c = self.cells[cell];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    pub fn cell_area(&self, cell: usize) -> f64 {
        triangle_area(&self.triangle(cell))
    }

    pub fn cell_diameter(&self, cell: usize) -> f64 {
        triangle_diameter(&self.triangle(cell))
    }

    pub fn cell_bbox(&self, cell: usize) -> BBox {
        BBox::from_points(self.triangle(cell).iter())
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge].vertices;
        self.vertices[a].dist(self.vertices[b])
    }

    pub fn bbox(&self) -> BBox {
        BBox::from_points(self.vertices.iter())
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Maximum cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    /// Cells sharing an edge with `cell`.
    pub fn cell_neighbors(&self, cell: usize) -> Vec<usize> {
        self.cell_edges[cell]
            .iter()
            .filter_map(|&e| {
                let [a, b] = self.edges[e].cells;
                if a == Some(cell) {
                    b
                } else {
                    a
                }
            })
            .collect()
    }

    /// Cells incident to `edge`.
    pub fn edge_cells(&self, edge: usize) -> Vec<usize> {
        self.edges[edge].cells.iter().flatten().copied().collect()
    }

    /// Boundary vertices in the order of a closed counterclockwise loop, when
    /// the boundary is a single loop.
    pub fn boundary_loop(&self) -> Option<Vec<usize>> {
        let mut next = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for i in 0..3 {
                let e = &self.edges[self.cell_edges[c][i]];
                if e.is_boundary() {
                    next.insert(cell[(i + 1) % 3], cell[(i + 2) % 3]);
                }
            }
        }
        let start = *next.keys().min()?;
        let mut out = vec![start];
        let mut cur = next[&start];
        while cur != start {
            out.push(cur);
            cur = *next.get(&cur)?;
            if out.len() > next.len() {
                return None;
            }
        }
        (out.len() == next.len()).then_some(out)
    }

    /// Checks conformity: interior edges are shared by exactly two cells with
    /// opposite orientation, boundary edges carry the role flag, and no vertex
    /// hangs on an edge.
    pub fn check_conformity(&self) -> Result<()> {
        let mut directed = HashMap::new();
        for (c, cell) in self.cells.iter().enumerate() {
            for i in 0..3 {
                let key = (cell[i], cell[(i + 1) % 3]);
                if directed.insert(key, c).is_some() {
                    return Err(FdlmError::Internal(format!(
                        "directed edge {key:?} appears twice (orientation clash)"
                    )));
                }
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            let expected = if e.is_boundary() {
                self.role.flag()
            } else {
                EdgeFlag::Interior
            };
            if e.flag != expected {
                return Err(FdlmError::Internal(format!("edge {i} has flag {:?}", e.flag)));
            }
        }
        let mut used = vec![false; self.vertices.len()];
        for cell in &self.cells {
            for &v in cell {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(FdlmError::Internal(format!("vertex {v} is not used by any cell")));
        }
        // A hanging vertex leaves unpaired edges on both sides of it, so it
        // shows up as a "boundary" vertex lying inside a boundary edge.
        let bverts: Vec<usize> = (0..self.vertices.len())
            .filter(|&v| self.boundary_vertex[v])
            .collect();
        for (i, e) in self.edges.iter().enumerate() {
            if !e.is_boundary() {
                continue;
            }
            let [a, b] = e.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let len2 = (pb - pa).dot(pb - pa);
            for &v in &bverts {
                if v == a || v == b {
                    continue;
                }
                let p = self.vertices[v];
                let t = (p - pa).dot(pb - pa) / len2;
                let off = orient(pa, pb, p).abs() / len2.sqrt();
                if t > 1e-12 && t < 1.0 - 1e-12 && off < 1e-12 * len2.sqrt() {
                    return Err(FdlmError::Internal(format!(
                        "hanging vertex {v} on edge {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn longest_edge(vertices: &[Point2], cell: &[usize; 3]) -> Result<u8> {
    let mut best = 0u8;
    let mut best_len = -1.0;
    let mut best_key = (usize::MAX, usize::MAX);
    for i in 0..3u8 {
        let a = cell[(i as usize + 1) % 3];
        let b = cell[(i as usize + 2) % 3];
        let (pa, pb) = match (vertices.get(a), vertices.get(b)) {
            (Some(pa), Some(pb)) => (*pa, *pb),
            _ => return Err(FdlmError::invalid("cell references a missing vertex")),
        };
        let len = pa.dist(pb);
        let key = (a.min(b), a.max(b));
        if len > best_len || (len == best_len && key < best_key) {
            best = i;
            best_len = len;
            best_key = key;
        }
    }
    Ok(best)
}

fn build_edges(cells: &[[usize; 3]], role: BoundaryRole) -> Result<(Vec<Edge>, Vec<[usize; 3]>)> {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(cells.len() * 2);
    let mut edges: Vec<Edge> = Vec::with_capacity(cells.len() * 2);
    let mut cell_edges = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let mut ce = [0usize; 3];
        for i in 0..3 {
            let a = cell[(i + 1) % 3];
            let b = cell[(i + 2) % 3];
            let key = (a.min(b), a.max(b));
            let id = match lookup.get(&key) {
                Some(&id) => {
                    let e = &mut edges[id];
                    if e.cells[1].is_some() {
                        return Err(FdlmError::invalid(format!(
                            "edge {key:?} is shared by more than two cells"
                        )));
                    }
                    e.cells[1] = Some(c);
                    id
                }
                None => {
                    let id = edges.len();
                    edges.push(Edge {
                        vertices: [key.0, key.1],
                        cells: [Some(c), None],
                        flag: EdgeFlag::Interior,
                    });
                    lookup.insert(key, id);
                    id
                }
            };
            ce[i] = id;
        }
        cell_edges.push(ce);
    }
    for e in &mut edges {
        if e.cells[1].is_none() {
            e.flag = role.flag();
        }
    }
    Ok((edges, cell_edges))
}

/// Structured triangulation of `bbox`: `n × n` squares, each split along the
/// diagonal from its lower-left to its upper-right corner.
pub fn build_rect_mesh(bbox: BBox, n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(FdlmError::invalid("rectangular mesh needs n >= 1"));
    }
    bbox.validate()?;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        let y = bbox.min.y + bbox.height() * j as f64 / n as f64;
        for i in 0..=n {
            let x = bbox.min.x + bbox.width() * i as f64 / n as f64;
            vertices.push(Point2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.push([p00, p10, p11]);
            cells.push([p00, p11, p01]);
        }
    }
    Mesh::new(vertices, cells, BoundaryRole::Outer, None)
}

/// Triangulation of a disk: a fan of eight triangles around the center,
/// uniformly refined `level` times with boundary vertices projected onto the
/// circle. Boundary edges are flagged as interface.
pub fn build_disk_mesh(geom: DiskGeometry, level: usize) -> Result<Mesh> {
    let geom = DiskGeometry::new(geom.center, geom.radius)?;
    const RING: usize = 8;
    let mut vertices = vec![geom.center];
    for k in 0..RING {
        let t = 2.0 * std::f64::consts::PI * k as f64 / RING as f64;
        vertices.push(geom.center + geom.radius * Point2::new(t.cos(), t.sin()));
    }
    let cells = (0..RING)
        .map(|k| [0, 1 + k, 1 + (k + 1) % RING])
        .collect();
    let mut mesh = Mesh::new(vertices, cells, BoundaryRole::Interface, Some(geom))?;
    for _ in 0..level {
        mesh = uniform_refine(&mesh);
    }
    Ok(mesh)
}
