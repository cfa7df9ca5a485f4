//! Scalar finite element spaces on triangles and single-mesh assembly.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FdlmError, Result};
use crate::geometry::{barycentric, triangle_area, Point2};
use crate::mesh::Mesh;
use crate::quadrature::QuadRule;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Default quadrature degree for volume integrals.
pub const DEFAULT_QUAD_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisFamily {
    P1,
    /// P1 enriched with the cubic bubble `27 λ₁λ₂λ₃`.
    P1Bubble,
    P0,
}

impl BasisFamily {
    pub fn local_dim(self) -> usize {
        match self {
            Self::P1 => 3,
            Self::P1Bubble => 4,
            Self::P0 => 1,
        }
    }

    pub fn is_continuous(self) -> bool {
        !matches!(self, Self::P0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    None,
    /// Vertices on the mesh boundary carry no dof.
    ZeroTrace,
}

/// Values, gradients and Laplacians of the local basis functions at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisValues {
    pub len: usize,
    pub values: [f64; 4],
    pub grads: [Point2; 4],
    pub laplacians: [f64; 4],
}

impl BasisValues {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn grads(&self) -> &[Point2] {
        &self.grads[..self.len]
    }
}

/// Gradients of the barycentric coordinates of a counterclockwise triangle.
pub fn barycentric_gradients(t: &[Point2; 3]) -> [Point2; 3] {
    let two_a = 2.0 * triangle_area(t);
    let g = |j: usize, k: usize| Point2::new((t[j].y - t[k].y) / two_a, (t[k].x - t[j].x) / two_a);
    [g(1, 2), g(2, 0), g(0, 1)]
}

/// Evaluates the local basis of `family` on triangle `t` at physical point `p`.
pub fn eval_local(family: BasisFamily, t: &[Point2; 3], p: Point2) -> BasisValues {
    let mut out = BasisValues {
        len: family.local_dim(),
        values: [0.0; 4],
        grads: [Point2::default(); 4],
        laplacians: [0.0; 4],
    };
    if family == BasisFamily::P0 {
        out.values[0] = 1.0;
        return out;
    }
    let l = barycentric(t, p);
    let gl = barycentric_gradients(t);
    out.values[..3].copy_from_slice(&l);
    out.grads[..3].copy_from_slice(&gl);
    if family == BasisFamily::P1Bubble {
        out.values[3] = 27.0 * l[0] * l[1] * l[2];
        out.grads[3] = 27.0 * (l[1] * l[2] * gl[0] + l[0] * l[2] * gl[1] + l[0] * l[1] * gl[2]);
        out.laplacians[3] = 54.0
            * (l[2] * gl[0].dot(gl[1]) + l[1] * gl[0].dot(gl[2]) + l[0] * gl[1].dot(gl[2]));
    }
    out
}

/// Global dof ids of the local basis functions of one cell (`None` for
/// constrained functions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDofs {
    pub len: usize,
    pub dofs: [Option<usize>; 4],
}

impl CellDofs {
    pub fn as_slice(&self) -> &[Option<usize>] {
        &self.dofs[..self.len]
    }
}

/// A finite element space bound to a mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    family: BasisFamily,
    constraint: Constraint,
    vertex_dof: Vec<Option<usize>>,
    num_vertex_dofs: usize,
    ndof: usize,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, family: BasisFamily, constraint: Constraint) -> Self {
        let mut vertex_dof = vec![None; mesh.num_vertices()];
        let mut num_vertex_dofs = 0;
        if family != BasisFamily::P0 {
            for (v, slot) in vertex_dof.iter_mut().enumerate() {
                if constraint == Constraint::None || !mesh.is_boundary_vertex(v) {
                    *slot = Some(num_vertex_dofs);
                    num_vertex_dofs += 1;
                }
            }
        }
        let ndof = match family {
            BasisFamily::P1 => num_vertex_dofs,
            BasisFamily::P1Bubble => num_vertex_dofs + mesh.num_cells(),
            BasisFamily::P0 => mesh.num_cells(),
        };
        Self {
            mesh,
            family,
            constraint,
            vertex_dof,
            num_vertex_dofs,
            ndof,
        }
    }

    /// The same family on the same mesh without boundary constraint.
    pub fn unconstrained(&self) -> Self {
        Self::new(self.mesh.clone(), self.family, Constraint::None)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    /// Number of dofs attached to vertices; these come first in the numbering.
    pub fn num_vertex_dofs(&self) -> usize {
        self.num_vertex_dofs
    }

    pub fn vertex_dof(&self, v: usize) -> Option<usize> {
        self.vertex_dof[v]
    }

    pub fn cell_dofs(&self, cell: usize) -> CellDofs {
        let mut out = CellDofs {
            len: self.family.local_dim(),
            dofs: [None; 4],
        };
        match self.family {
            BasisFamily::P0 => out.dofs[0] = Some(cell),
            _ => {
                for (i, &v) in self.mesh.cells()[cell].iter().enumerate() {
                    out.dofs[i] = self.vertex_dof[v];
                }
                if self.family == BasisFamily::P1Bubble {
                    out.dofs[3] = Some(self.num_vertex_dofs + cell);
                }
            }
        }
        out
    }

    /// Basis values at physical point `p` of `cell`.
    pub fn eval_at(&self, cell: usize, p: Point2) -> BasisValues {
        eval_local(self.family, &self.mesh.triangle(cell), p)
    }

    /// Value and gradient of the function with dof vector `coeffs`.
    pub fn eval(&self, coeffs: &[f64], cell: usize, p: Point2) -> (f64, Point2) {
        let b = self.eval_at(cell, p);
        let d = self.cell_dofs(cell);
        let mut v = 0.0;
        let mut g = Point2::default();
        for i in 0..b.len {
            if let Some(k) = d.dofs[i] {
                v += coeffs[k] * b.values[i];
                g = g + coeffs[k] * b.grads[i];
            }
        }
        (v, g)
    }

    /// Laplacian of the function inside `cell` (only the bubble contributes).
    pub fn laplacian(&self, coeffs: &[f64], cell: usize, p: Point2) -> f64 {
        let b = self.eval_at(cell, p);
        let d = self.cell_dofs(cell);
        (0..b.len)
            .filter_map(|i| d.dofs[i].map(|k| coeffs[k] * b.laplacians[i]))
            .sum()
    }

    /// Nodal interpolant for P1 families (bubble coefficients zero), cell
    /// barycenter values for P0.
    pub fn interpolate(&self, f: impl Fn(Point2) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.ndof];
        match self.family {
            BasisFamily::P0 => {
                for c in 0..self.mesh.num_cells() {
                    let t = self.mesh.triangle(c);
                    out[c] = f((1.0 / 3.0) * (t[0] + t[1] + t[2]));
                }
            }
            _ => {
                for (v, d) in self.vertex_dof.iter().enumerate() {
                    if let Some(k) = d {
                        out[*k] = f(self.mesh.vertices()[v]);
                    }
                }
            }
        }
        out
    }
}

/// Basis evaluation at reference points of one cell.
pub fn eval_basis(space: &FeSpace, cell: usize, ref_pts: &[Point2]) -> Vec<BasisValues> {
    let t = space.mesh().triangle(cell);
    ref_pts
        .iter()
        .map(|r| {
            let p = t[0] + r.x * (t[1] - t[0]) + r.y * (t[2] - t[0]);
            eval_local(space.family(), &t, p)
        })
        .collect()
}

pub(crate) type Local = Vec<(usize, usize, f64)>;

pub(crate) fn assemble_cells<F>(nrows: usize, ncols: usize, ncells: usize, local: F) -> CsrMatrix
where
    F: Fn(usize) -> Local + Sync + Send,
{
    let parts: Vec<Local> = (0..ncells).into_par_iter().map(&local).collect();
    let cap = parts.iter().map(Vec::len).sum();
    let mut t = TripletBuilder::with_capacity(nrows, ncols, cap);
    for part in parts {
        for (i, j, v) in part {
            t.add(i, j, v);
        }
    }
    t.build()
}

/// `(coeff ∇φ_j, ∇φ_i)`. A zero coefficient is rejected unless `allow_zero`.
pub fn assemble_stiffness(space: &FeSpace, coeff: f64, allow_zero: bool) -> Result<CsrMatrix> {
    if !coeff.is_finite() || coeff < 0.0 || (coeff == 0.0 && !allow_zero) {
        return Err(FdlmError::invalid(format!(
            "stiffness coefficient must be positive (got {coeff})"
        )));
    }
    let q = QuadRule::triangle(DEFAULT_QUAD_DEGREE)?;
    let n = space.ndof();
    Ok(assemble_cells(n, n, space.mesh().num_cells(), |c| {
        let t = space.mesh().triangle(c);
        let area = triangle_area(&t);
        let d = space.cell_dofs(c);
        let mut out = Vec::with_capacity(d.len * d.len);
        let mut k = [[0.0; 4]; 4];
        for (p, w) in q.map(&t) {
            let b = eval_local(space.family(), &t, p);
            for i in 0..d.len {
                for j in 0..d.len {
                    k[i][j] += w * b.grads[i].dot(b.grads[j]);
                }
            }
        }
        for i in 0..d.len {
            for j in 0..d.len {
                if let (Some(gi), Some(gj)) = (d.dofs[i], d.dofs[j]) {
                    out.push((gi, gj, coeff * area * k[i][j]));
                }
            }
        }
        out
    }))
}

/// `(φ_j, φ_i)`.
pub fn assemble_mass(space: &FeSpace) -> Result<CsrMatrix> {
    let q = QuadRule::triangle(6)?;
    let n = space.ndof();
    Ok(assemble_cells(n, n, space.mesh().num_cells(), |c| {
        let t = space.mesh().triangle(c);
        let area = triangle_area(&t);
        let d = space.cell_dofs(c);
        let mut out = Vec::new();
        let mut k = [[0.0; 4]; 4];
        for (p, w) in q.map(&t) {
            let b = eval_local(space.family(), &t, p);
            for i in 0..d.len {
                for j in 0..d.len {
                    k[i][j] += w * b.values[i] * b.values[j];
                }
            }
        }
        for i in 0..d.len {
            for j in 0..d.len {
                if let (Some(gi), Some(gj)) = (d.dofs[i], d.dofs[j]) {
                    out.push((gi, gj, area * k[i][j]));
                }
            }
        }
        out
    }))
}

/// `(f, φ_i)` with the default degree-4 rule.
pub fn assemble_load(space: &FeSpace, f: &(dyn Fn(Point2) -> f64 + Sync)) -> Result<Vec<f64>> {
    assemble_load_with(space, f, DEFAULT_QUAD_DEGREE)
}

pub fn assemble_load_with(
    space: &FeSpace,
    f: &(dyn Fn(Point2) -> f64 + Sync),
    degree: usize,
) -> Result<Vec<f64>> {
    let q = QuadRule::triangle(degree)?;
    let parts: Vec<(CellDofs, [f64; 4])> = (0..space.mesh().num_cells())
        .into_par_iter()
        .map(|c| {
            let t = space.mesh().triangle(c);
            let area = triangle_area(&t);
            let mut loc = [0.0; 4];
            for (p, w) in q.map(&t) {
                let fv = f(p);
                let b = eval_local(space.family(), &t, p);
                for i in 0..b.len {
                    loc[i] += area * w * fv * b.values[i];
                }
            }
            (space.cell_dofs(c), loc)
        })
        .collect();
    let mut out = vec![0.0; space.ndof()];
    for (d, loc) in parts {
        for i in 0..d.len {
            if let Some(k) = d.dofs[i] {
                out[k] += loc[i];
            }
        }
    }
    Ok(out)
}

/// Cellwise mean values of `f` (L² projection onto P0), degree-4 rule.
pub fn project_pc(f: &(dyn Fn(Point2) -> f64 + Sync), mesh: &Mesh) -> Vec<f64> {
    let q = QuadRule::triangle(DEFAULT_QUAD_DEGREE).expect("degree 4 rule");
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| q.map(&mesh.triangle(c)).map(|(p, w)| w * f(p)).sum())
        .collect()
}
