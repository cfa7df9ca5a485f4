//! Problem data, discretization and the block saddle-point system
//!
//! ```text
//! [ A   0    C₁ᵀ ] [u ]   [g ]
//! [ 0   A₂  −C₂ᵀ ] [u₂] = [g₂]
//! [ C₁ −C₂   0   ] [λ ]   [g₃]
//! ```
//!
//! `g₃` vanishes for homogeneous Dirichlet data; otherwise the boundary values
//! of the background field are lifted out of the system.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coupling::{assemble_c1, assemble_c2, check_compatible, AssemblyMode, CouplingForm};
use crate::error::{FdlmError, Result};
use crate::fem::{assemble_load, assemble_stiffness, BasisFamily, Constraint, FeSpace};
use crate::geometry::Point2;
use crate::intersection::{BoxIndex, IntersectionMap};
use crate::mesh::Mesh;
use crate::sparse::{norm_inf, CsrMatrix, TripletBuilder};

use super::gmres::LinearOperator;

pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// Coefficients and sources of the interface problem.
#[derive(Clone)]
pub struct ProblemData {
    pub nu: f64,
    pub nu2: f64,
    /// Source on Ω (extended into Ω₂).
    pub f: ScalarFn,
    /// Source on Ω₂.
    pub f2: ScalarFn,
    /// Dirichlet data on ∂Ω; `None` means zero.
    pub boundary: Option<ScalarFn>,
    /// Accept `nu2 <= nu`.
    pub allow_nonpositive_jump: bool,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("nu", &self.nu)
            .field("nu2", &self.nu2)
            .field("boundary", &self.boundary.is_some())
            .field("allow_nonpositive_jump", &self.allow_nonpositive_jump)
            .finish()
    }
}

impl ProblemData {
    pub fn new(nu: f64, nu2: f64, f: ScalarFn, f2: ScalarFn) -> Self {
        Self {
            nu,
            nu2,
            f,
            f2,
            boundary: None,
            allow_nonpositive_jump: false,
        }
    }

    pub fn constant(nu: f64, nu2: f64, f: f64, f2: f64) -> Self {
        Self::new(nu, nu2, Arc::new(move |_| f), Arc::new(move |_| f2))
    }

    pub fn with_boundary(mut self, g: ScalarFn) -> Self {
        self.boundary = Some(g);
        self
    }

    pub fn allow_nonpositive_jump(mut self, allow: bool) -> Self {
        self.allow_nonpositive_jump = allow;
        self
    }

    /// Multiplies all sources and boundary data by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let (f, f2) = (self.f.clone(), self.f2.clone());
        let mut out = Self::new(self.nu, self.nu2, Arc::new(move |p| s * f(p)), Arc::new(move |p| s * f2(p)));
        out.boundary = self.boundary.clone().map(|g| Arc::new(move |p| s * g(p)) as ScalarFn);
        out.allow_nonpositive_jump = self.allow_nonpositive_jump;
        out
    }

    /// `f₂ − f`, the source of the immersed equation.
    pub fn f2_minus_f(&self) -> ScalarFn {
        let (f, f2) = (self.f.clone(), self.f2.clone());
        Arc::new(move |p| f2(p) - f(p))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() || !self.nu2.is_finite() {
            return Err(FdlmError::invalid(format!("need nu > 0 (got {})", self.nu)));
        }
        if self.nu2 <= self.nu {
            if !self.allow_nonpositive_jump {
                return Err(FdlmError::invalid(format!(
                    "nu2 = {} must exceed nu = {} (override available)",
                    self.nu2, self.nu
                )));
            }
            log::warn!(
                "nu2 = {} <= nu = {}: the discrete problem may be ill-posed",
                self.nu2,
                self.nu
            );
        }
        Ok(())
    }
}

/// The pair of finite element families for the immersed field and the
/// multiplier; the background field is always P1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementFamily {
    /// P1 / P1 / P1
    P1P1P1,
    /// P1 / P1 + bubble / P0
    P1BubbleP0,
}

impl ElementFamily {
    pub fn immersed(self) -> BasisFamily {
        match self {
            Self::P1P1P1 => BasisFamily::P1,
            Self::P1BubbleP0 => BasisFamily::P1Bubble,
        }
    }

    pub fn multiplier(self) -> BasisFamily {
        match self {
            Self::P1P1P1 => BasisFamily::P1,
            Self::P1BubbleP0 => BasisFamily::P0,
        }
    }
}

impl fmt::Display for ElementFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::P1P1P1 => "p1p1p1",
            Self::P1BubbleP0 => "p1bubble-p0",
        })
    }
}

impl FromStr for ElementFamily {
    type Err = FdlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1p1p1" => Ok(Self::P1P1P1),
            "p1bubble-p0" | "p1bubblep0" => Ok(Self::P1BubbleP0),
            _ => Err(FdlmError::invalid(format!("unknown element family '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub element: ElementFamily,
    pub form: CouplingForm,
    pub mode: AssemblyMode,
}

impl CouplingConfig {
    pub fn new(element: ElementFamily, form: CouplingForm, mode: AssemblyMode) -> Result<Self> {
        check_compatible(element.multiplier(), form)?;
        mode.validate()?;
        Ok(Self { element, form, mode })
    }
}

/// Meshes, spaces and geometric data of one discretization level.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub config: CouplingConfig,
    /// Background P1 space with zero trace on ∂Ω.
    pub v: FeSpace,
    /// Same mesh, all vertices.
    pub v_full: FeSpace,
    pub v2: FeSpace,
    pub lambda: FeSpace,
    pub index: BoxIndex,
    pub imap: IntersectionMap,
}

impl Discretization {
    pub fn new(bg: Arc<Mesh>, im: Arc<Mesh>, config: CouplingConfig) -> Result<Self> {
        check_compatible(config.element.multiplier(), config.form)?;
        let index = BoxIndex::build(&bg);
        let imap = IntersectionMap::build(&im, &bg, &index)?;
        Ok(Self {
            config,
            v: FeSpace::new(bg.clone(), BasisFamily::P1, Constraint::ZeroTrace),
            v_full: FeSpace::new(bg, BasisFamily::P1, Constraint::None),
            v2: FeSpace::new(im.clone(), config.element.immersed(), Constraint::None),
            lambda: FeSpace::new(im, config.element.multiplier(), Constraint::None),
            index,
            imap,
        })
    }

    pub fn bg_mesh(&self) -> &Mesh {
        self.v.mesh()
    }

    pub fn im_mesh(&self) -> &Mesh {
        self.v2.mesh()
    }

    /// `n + n₂ + m`
    pub fn ndof(&self) -> usize {
        self.v.ndof() + self.v2.ndof() + self.lambda.ndof()
    }

    /// Maps each background vertex to its position among the boundary vertices.
    fn boundary_map(&self) -> (Vec<Option<usize>>, usize) {
        let mesh = self.bg_mesh();
        let mut map = vec![None; mesh.num_vertices()];
        let mut nb = 0;
        for (v, slot) in map.iter_mut().enumerate() {
            if self.v.vertex_dof(v).is_none() {
                *slot = Some(nb);
                nb += 1;
            }
        }
        (map, nb)
    }

    fn free_map(&self) -> Vec<Option<usize>> {
        (0..self.bg_mesh().num_vertices()).map(|v| self.v.vertex_dof(v)).collect()
    }
}

/// Blocks and right-hand sides of the discrete saddle-point problem.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub a: CsrMatrix,
    pub a2: CsrMatrix,
    pub c1: CsrMatrix,
    pub c2: CsrMatrix,
    pub g: Vec<f64>,
    pub g2: Vec<f64>,
    pub g3: Vec<f64>,
    /// Values of the background field at every vertex of ∂Ω.
    pub boundary_values: Vec<f64>,
    pub assembly_s: f64,
}

/// Assembles the block system for `data` on `disc`.
pub fn assemble_system(data: &ProblemData, disc: &Discretization) -> Result<BlockSystem> {
    data.validate()?;
    let t0 = Instant::now();
    let cfg = disc.config;
    let a_full = assemble_stiffness(&disc.v_full, data.nu, false)?;
    let a2 = assemble_stiffness(&disc.v2, data.nu2 - data.nu, data.allow_nonpositive_jump)?;
    let imap = match cfg.mode {
        AssemblyMode::Exact => Some(&disc.imap),
        AssemblyMode::Inexact(_) => None,
    };
    let c1_full = assemble_c1(&disc.lambda, &disc.v_full, &disc.index, imap, cfg.form, cfg.mode)?;
    let c2 = assemble_c2(&disc.lambda, &disc.v2, cfg.form)?;
    let f_full = assemble_load(&disc.v_full, &*data.f)?;
    let g2 = assemble_load(&disc.v2, &*data.f2_minus_f())?;

    let nv = disc.bg_mesh().num_vertices();
    let n = disc.v.ndof();
    let m = disc.lambda.ndof();
    let free = disc.free_map();
    let (bmap, nb) = disc.boundary_map();
    let all: Vec<Option<usize>> = (0..m).map(Some).collect();

    let a = a_full.select(&free, n, &free, n);
    let c1 = c1_full.select(&all, m, &free, n);
    let mut g = vec![0.0; n];
    for v in 0..nv {
        if let Some(k) = free[v] {
            g[k] = f_full[v];
        }
    }
    let mut boundary_values = vec![0.0; nb];
    let mut g3 = vec![0.0; m];
    if let Some(bfun) = &data.boundary {
        for v in 0..nv {
            if let Some(k) = bmap[v] {
                boundary_values[k] = bfun(disc.bg_mesh().vertices()[v]);
            }
        }
        let a_b = a_full.select(&free, n, &bmap, nb);
        a_b.mul_vec_add(-1.0, &boundary_values, &mut g);
        let c1_b = c1_full.select(&all, m, &bmap, nb);
        c1_b.mul_vec_add(-1.0, &boundary_values, &mut g3);
    }
    Ok(BlockSystem {
        a,
        a2,
        c1,
        c2,
        g,
        g2,
        g3,
        boundary_values,
        assembly_s: t0.elapsed().as_secs_f64(),
    })
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn n2(&self) -> usize {
        self.a2.nrows()
    }

    pub fn m(&self) -> usize {
        self.c2.nrows()
    }

    pub fn dim(&self) -> usize {
        self.n() + self.n2() + self.m()
    }

    pub fn rhs(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.dim());
        b.extend_from_slice(&self.g);
        b.extend_from_slice(&self.g2);
        b.extend_from_slice(&self.g3);
        b
    }

    /// Splits a full vector into `(u, u₂, λ)`.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (u, rest) = x.split_at(self.n());
        let (u2, l) = rest.split_at(self.n2());
        (u, u2, l)
    }

    /// The whole system matrix.
    pub fn matrix(&self) -> CsrMatrix {
        let (n, n2) = (self.n(), self.n2());
        let d = self.dim();
        let mut t = TripletBuilder::with_capacity(
            d,
            d,
            self.a.nnz() + self.a2.nnz() + 2 * (self.c1.nnz() + self.c2.nnz()),
        );
        for (i, j, v) in self.a.triplets() {
            t.add(i, j, v);
        }
        for (i, j, v) in self.a2.triplets() {
            t.add(n + i, n + j, v);
        }
        for (k, j, v) in self.c1.triplets() {
            t.add(n + n2 + k, j, v);
            t.add(j, n + n2 + k, v);
        }
        for (k, j, v) in self.c2.triplets() {
            t.add(n + n2 + k, n + j, -v);
            t.add(n + j, n + n2 + k, -v);
        }
        t.build()
    }

    /// The multiplier block `L = [A₂, −C₂ᵀ; −C₂, 0]`.
    pub fn l_block(&self) -> CsrMatrix {
        let n2 = self.n2();
        let d = n2 + self.m();
        let mut t = TripletBuilder::with_capacity(d, d, self.a2.nnz() + 2 * self.c2.nnz());
        for (i, j, v) in self.a2.triplets() {
            t.add(i, j, v);
        }
        for (k, j, v) in self.c2.triplets() {
            t.add(n2 + k, j, -v);
            t.add(j, n2 + k, -v);
        }
        t.build()
    }

    /// `‖C₁u + C₁,B g_B − C₂u₂‖_∞`, i.e. the defect of the constraint equation.
    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        let (u, u2, _) = self.split(x);
        let mut r = self.c1.mul_vec(u);
        self.c2.mul_vec_add(-1.0, u2, &mut r);
        for (ri, gi) in r.iter_mut().zip(&self.g3) {
            *ri -= gi;
        }
        norm_inf(&r)
    }

    /// Background field on all vertices (boundary values re-inserted).
    pub fn background_nodal(&self, disc: &Discretization, u: &[f64]) -> Vec<f64> {
        let (bmap, _) = disc.boundary_map();
        (0..disc.bg_mesh().num_vertices())
            .map(|v| match (disc.v.vertex_dof(v), bmap[v]) {
                (Some(k), _) => u[k],
                (None, Some(b)) => self.boundary_values[b],
                (None, None) => 0.0,
            })
            .collect()
    }
}

impl LinearOperator for BlockSystem {
    fn dim(&self) -> usize {
        BlockSystem::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (n, n2) = (self.n(), self.n2());
        let (u, u2, l) = self.split(x);
        let (y1, rest) = y.split_at_mut(n);
        let (y2, y3) = rest.split_at_mut(n2);
        self.a.mul_vec_into(u, y1);
        // C₁ᵀλ and C₂ᵀλ without forming the transposes
        for (k, &lk) in l.iter().enumerate() {
            if lk != 0.0 {
                for (j, v) in self.c1.row(k) {
                    y1[j] += v * lk;
                }
            }
        }
        self.a2.mul_vec_into(u2, y2);
        for (k, &lk) in l.iter().enumerate() {
            if lk != 0.0 {
                for (j, v) in self.c2.row(k) {
                    y2[j] -= v * lk;
                }
            }
        }
        self.c1.mul_vec_into(u, y3);
        self.c2.mul_vec_add(-1.0, u2, y3);
    }
}
