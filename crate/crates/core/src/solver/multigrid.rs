//! Geometric multigrid for the background stiffness matrix on a hierarchy of
//! uniformly refined meshes.

use std::sync::Arc;

use crate::error::{FdlmError, Result};
use crate::fem::{assemble_stiffness, BasisFamily, Constraint, FeSpace};
use crate::mesh::{uniform_refine_with_parents, Mesh};
use crate::sparse::{norm2, CsrMatrix, TripletBuilder};

use super::direct::DirectSolver;
use super::gmres::Preconditioner;

/// Nested meshes; `parents[k]` maps the vertices of level `k + 1` to the
/// endpoints of the level-`k` edge they bisect (or `[v, v]`).
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    pub meshes: Vec<Arc<Mesh>>,
    pub parents: Vec<Vec<[usize; 2]>>,
}

impl MeshHierarchy {
    pub fn single(mesh: Arc<Mesh>) -> Self {
        Self {
            meshes: vec![mesh],
            parents: Vec::new(),
        }
    }

    /// `coarse` followed by `levels` uniform refinements.
    pub fn uniform(coarse: Mesh, levels: usize) -> Self {
        let mut h = Self::single(Arc::new(coarse));
        for _ in 0..levels {
            h.refine();
        }
        h
    }

    pub fn refine(&mut self) {
        let r = uniform_refine_with_parents(self.finest());
        self.meshes.push(Arc::new(r.mesh));
        self.parents.push(r.parents);
    }

    pub fn finest(&self) -> &Arc<Mesh> {
        self.meshes.last().expect("hierarchy is never empty")
    }

    pub fn num_levels(&self) -> usize {
        self.meshes.len()
    }

    /// The hierarchy truncated to its first `levels` meshes.
    pub fn truncated(&self, levels: usize) -> Self {
        let levels = levels.clamp(1, self.meshes.len());
        Self {
            meshes: self.meshes[..levels].to_vec(),
            parents: self.parents[..levels - 1].to_vec(),
        }
    }
}

/// Smoother and cycle parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultigridParams {
    pub cycles: usize,
    pub pre_smooth: usize,
    pub post_smooth: usize,
    pub damping: f64,
}

impl Default for MultigridParams {
    fn default() -> Self {
        Self {
            cycles: 1,
            pre_smooth: 3,
            post_smooth: 3,
            damping: 2.0 / 3.0,
        }
    }
}

#[derive(Debug)]
struct Level {
    a: CsrMatrix,
    inv_diag: Vec<f64>,
    /// From the next coarser level to this one.
    prolong: Option<CsrMatrix>,
    restrict: Option<CsrMatrix>,
}

/// V-cycle for `(coeff ∇u, ∇v)` with zero trace, rediscretized on each level.
#[derive(Debug)]
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: DirectSolver,
    params: MultigridParams,
}

fn prolongation(fine: &FeSpace, coarse: &FeSpace, parents: &[[usize; 2]]) -> CsrMatrix {
    let mut t = TripletBuilder::new(fine.ndof(), coarse.ndof());
    for (v, &[a, b]) in parents.iter().enumerate() {
        let Some(i) = fine.vertex_dof(v) else { continue };
        if a == b {
            if let Some(j) = coarse.vertex_dof(a) {
                t.add(i, j, 1.0);
            }
        } else {
            for p in [a, b] {
                if let Some(j) = coarse.vertex_dof(p) {
                    t.add(i, j, 0.5);
                }
            }
        }
    }
    t.build()
}

impl Multigrid {
    pub fn new(h: &MeshHierarchy, coeff: f64, params: MultigridParams) -> Result<Self> {
        if params.damping <= 0.0 || params.cycles == 0 {
            return Err(FdlmError::invalid(format!("bad multigrid parameters {params:?}")));
        }
        let spaces: Vec<FeSpace> = h
            .meshes
            .iter()
            .map(|m| FeSpace::new(m.clone(), BasisFamily::P1, Constraint::ZeroTrace))
            .collect();
        let mut levels = Vec::with_capacity(spaces.len());
        for (k, s) in spaces.iter().enumerate() {
            let a = assemble_stiffness(s, coeff, false)?;
            let inv_diag = a.diagonal().iter().map(|d| 1.0 / d).collect();
            let prolong = (k > 0).then(|| prolongation(s, &spaces[k - 1], &h.parents[k - 1]));
            let restrict = prolong.as_ref().map(CsrMatrix::transpose);
            levels.push(Level {
                a,
                inv_diag,
                prolong,
                restrict,
            });
        }
        let coarse = DirectSolver::cholesky(&levels[0].a)?;
        Ok(Self {
            levels,
            coarse,
            params,
        })
    }

    /// Matrix of the finest level.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.levels.last().expect("at least one level").a
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn params(&self) -> MultigridParams {
        self.params
    }

    fn smooth(&self, l: usize, b: &[f64], x: &mut [f64], steps: usize, r: &mut [f64]) {
        let lv = &self.levels[l];
        for _ in 0..steps {
            lv.a.mul_vec_into(x, r);
            for i in 0..x.len() {
                x[i] += self.params.damping * lv.inv_diag[i] * (b[i] - r[i]);
            }
        }
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l == 0 {
            x.copy_from_slice(b);
            self.coarse.solve_in_place(x);
            return;
        }
        let lv = &self.levels[l];
        let mut r = vec![0.0; b.len()];
        self.smooth(l, b, x, self.params.pre_smooth, &mut r);
        lv.a.mul_vec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rc = lv.restrict.as_ref().expect("fine level").mul_vec(&r);
        let mut ec = vec![0.0; rc.len()];
        self.vcycle(l - 1, &rc, &mut ec);
        lv.prolong.as_ref().expect("fine level").mul_vec_add(1.0, &ec, x);
        self.smooth(l, b, x, self.params.post_smooth, &mut r);
    }

    /// One V-cycle improving `x` for `A x = b`.
    pub fn cycle(&self, b: &[f64], x: &mut [f64]) {
        self.vcycle(self.levels.len() - 1, b, x);
    }

    /// `params.cycles` V-cycles from a zero initial guess.
    pub fn solve_approx(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        for _ in 0..self.params.cycles {
            self.cycle(b, &mut x);
        }
        x
    }

    /// Residual reduction factors of `cycles` successive V-cycles applied to
    /// `A x = b` from `x = 0`.
    pub fn contraction_factors(&self, b: &[f64], cycles: usize) -> Vec<f64> {
        let a = self.matrix();
        let mut x = vec![0.0; b.len()];
        let mut prev = norm2(b);
        let mut out = Vec::with_capacity(cycles);
        for _ in 0..cycles {
            self.cycle(b, &mut x);
            let mut r = a.mul_vec(&x);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
            let nr = norm2(&r);
            out.push(nr / prev);
            prev = nr;
        }
        out
    }
}

impl Preconditioner for Multigrid {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(&self.solve_approx(r));
        Ok(())
    }
}
