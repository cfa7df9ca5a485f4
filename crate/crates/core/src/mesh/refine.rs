//! Uniform (red) refinement and newest-vertex bisection.

use std::collections::HashMap;

use super::Mesh;

/// A refined mesh together with the parents of every vertex: old vertices map
/// to `[v, v]`, new vertices to the endpoints of the edge they bisect.
#[derive(Debug, Clone)]
pub struct Refinement {
    pub mesh: Mesh,
    pub parents: Vec<[usize; 2]>,
}

/// Rotates a cell so that its refinement edge is opposite local vertex 0.
fn canonical(cell: [usize; 3], refinement_edge: u8) -> [usize; 3] {
    let r = refinement_edge as usize;
    [cell[r], cell[(r + 1) % 3], cell[(r + 2) % 3]]
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Builder<'a> {
    parent: &'a Mesh,
    vertices: Vec<crate::geometry::Point2>,
    parents: Vec<[usize; 2]>,
}

impl<'a> Builder<'a> {
    fn new(parent: &'a Mesh) -> Self {
        Self {
            parent,
            vertices: parent.vertices.clone(),
            parents: (0..parent.num_vertices()).map(|v| [v, v]).collect(),
        }
    }

    fn midpoint(&mut self, edge: usize) -> usize {
        let e = &self.parent.edges[edge];
        let [a, b] = e.vertices;
        let mut p = self.vertices[a].midpoint(self.vertices[b]);
        if e.is_boundary() {
            if let Some(disk) = self.parent.snap {
                p = disk.project(p);
            }
        }
        self.vertices.push(p);
        self.parents.push([a, b]);
        self.vertices.len() - 1
    }

    fn finish(self, cells: Vec<[usize; 3]>, refinement_edge: Vec<u8>, generation: Vec<u32>) -> Refinement {
        let mesh = Mesh::from_parts(
            self.vertices,
            cells,
            refinement_edge,
            generation,
            self.parent.role,
            self.parent.snap,
        )
        .expect("refinement of a valid mesh is valid");
        Refinement {
            mesh,
            parents: self.parents,
        }
    }
}

/// Splits every triangle into four similar children through its edge
/// midpoints. Children keep the refinement edge parallel to the parent's one.
pub fn uniform_refine(mesh: &Mesh) -> Mesh {
    uniform_refine_with_parents(mesh).mesh
}

pub fn uniform_refine_with_parents(mesh: &Mesh) -> Refinement {
    let mut b = Builder::new(mesh);
    let mids: Vec<usize> = (0..mesh.edges.len()).map(|e| b.midpoint(e)).collect();
    let mut cells = Vec::with_capacity(4 * mesh.num_cells());
    let mut generation = Vec::with_capacity(4 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let r = mesh.refinement_edge[c] as usize;
        let [a, bb, cc] = canonical(mesh.cells[c], r as u8);
        // cell_edges[c][i] is opposite local vertex i of the stored cell
        let edge_opposite = |local: usize| mids[mesh.cell_edges[c][(r + local) % 3]];
        let m_bc = edge_opposite(0);
        let m_ca = edge_opposite(1);
        let m_ab = edge_opposite(2);
        // Homothetic images of [a, b, c]; the middle one is a point reflection.
        cells.push([a, m_ab, m_ca]);
        cells.push([m_ab, bb, m_bc]);
        cells.push([m_ca, m_bc, cc]);
        cells.push([m_bc, m_ca, m_ab]);
        generation.extend([mesh.generation[c] + 2; 4]);
    }
    let n = cells.len();
    b.finish(cells, vec![0; n], generation)
}

/// Newest-vertex bisection of the `marked` cells followed by the conforming
/// closure. Out-of-range ids are ignored.
pub fn bisect(mesh: &Mesh, marked: &[usize]) -> Refinement {
    let mut edge_marked = vec![false; mesh.edges.len()];
    let ref_edge = |c: usize| mesh.cell_edges[c][mesh.refinement_edge[c] as usize];
    for &c in marked {
        if c < mesh.num_cells() {
            edge_marked[ref_edge(c)] = true;
        }
    }
    // Closure: a cell with any marked edge must have its refinement edge marked.
    let mut changed = true;
    while changed {
        changed = false;
        for c in 0..mesh.num_cells() {
            let re = ref_edge(c);
            if !edge_marked[re] && mesh.cell_edges[c].iter().any(|&e| edge_marked[e]) {
                edge_marked[re] = true;
                changed = true;
            }
        }
    }

    let mut b = Builder::new(mesh);
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, &m) in edge_marked.iter().enumerate() {
        if m {
            let v = b.midpoint(e);
            let [x, y] = mesh.edges[e].vertices;
            mid.insert(key(x, y), v);
        }
    }

    let mut cells = Vec::with_capacity(mesh.num_cells() + 2 * mid.len());
    let mut generation = Vec::with_capacity(cells.capacity());
    let mut refinement_edge = Vec::with_capacity(cells.capacity());
    let mut stack = Vec::new();
    for c in 0..mesh.num_cells() {
        if !edge_marked[ref_edge(c)] {
            cells.push(mesh.cells[c]);
            refinement_edge.push(mesh.refinement_edge[c]);
            generation.push(mesh.generation[c]);
            continue;
        }
        stack.push((canonical(mesh.cells[c], mesh.refinement_edge[c]), mesh.generation[c]));
        while let Some(([a, bb, cc], g)) = stack.pop() {
            match mid.get(&key(bb, cc)) {
                Some(&m) => {
                    // pushed in reverse so the first child is emitted first
                    stack.push(([m, cc, a], g + 1));
                    stack.push(([m, a, bb], g + 1));
                }
                None => {
                    cells.push([a, bb, cc]);
                    refinement_edge.push(0);
                    generation.push(g);
                }
            }
        }
    }
    b.finish(cells, refinement_edge, generation)
}
