//! Solve-and-measure drivers for uniform refinement studies of the circle
//! benchmark.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::benchmark::{self, error_norms, ErrorNorms, ExactSolution};
use crate::error::{FdlmError, Result};
use crate::estimator::{estimate, IndicatorField};
use crate::mesh::{build_disk_mesh, build_rect_mesh, Mesh};
use crate::solver::{
    assemble_system, solve_system, BlockSystem, CouplingConfig, Discretization, GmresParams, MeshHierarchy,
    PrecondConfig, ProblemData, SolveReport,
};

/// Linear solver settings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolverConfig {
    pub precond: PrecondConfig,
    pub gmres: GmresParams,
}

/// Everything produced at one level.
#[derive(Debug)]
pub struct LevelOutcome {
    pub disc: Discretization,
    pub sys: BlockSystem,
    pub x: Vec<f64>,
    pub report: SolveReport,
    /// Background field on all vertices.
    pub u_nodal: Vec<f64>,
    pub errors: ErrorNorms,
    pub indicators: IndicatorField,
}

impl LevelOutcome {
    pub fn u2(&self) -> &[f64] {
        self.sys.split(&self.x).1
    }

    pub fn lambda(&self) -> &[f64] {
        self.sys.split(&self.x).2
    }
}

/// Assembles, solves, measures the benchmark errors and estimates.
pub fn solve_level(
    disc: Discretization,
    data: &ProblemData,
    solver: &SolverConfig,
    hierarchy: Option<&MeshHierarchy>,
) -> Result<LevelOutcome> {
    let sys = assemble_system(data, &disc)?;
    let (x, report) = solve_system(&sys, &solver.precond, hierarchy, data.nu, &solver.gmres)?;
    let (u, u2, lambda) = sys.split(&x);
    let u_nodal = sys.background_nodal(&disc, u);
    let errors = error_norms(&disc.v_full, &u_nodal, &disc.v2, u2, &ExactSolution);
    let indicators = estimate(&disc, &u_nodal, u2, lambda, data)?;
    Ok(LevelOutcome {
        disc,
        sys,
        x,
        report,
        u_nodal,
        errors,
        indicators,
    })
}

/// One row of `results.csv` plus the full solver report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub ndof: usize,
    pub h: f64,
    pub h2: f64,
    #[serde(rename = "errL2_u")]
    pub err_l2_u: f64,
    #[serde(rename = "errH1_u")]
    pub err_h1_u: f64,
    #[serde(rename = "errH1_u2")]
    pub err_h1_u2: f64,
    pub eta: f64,
    pub eta2: f64,
    pub gmres_its: usize,
    pub time_s: f64,
    pub n: usize,
    pub n2: usize,
    pub m: usize,
    pub bg_cells: usize,
    pub im_cells: usize,
    pub report: SolveReport,
    /// Background cells marked for refinement after this level (adaptive runs).
    pub marked_bg: usize,
    /// Of those, cells cut by the interface.
    pub marked_bg_cut: usize,
    pub marked_im: usize,
}

impl LevelRecord {
    pub fn from_outcome(level: usize, out: &LevelOutcome, time_s: f64) -> Self {
        Self {
            level,
            ndof: out.sys.dim(),
            h: out.disc.bg_mesh().mesh_size(),
            h2: out.disc.im_mesh().mesh_size(),
            err_l2_u: out.errors.l2_u,
            err_h1_u: out.errors.h1_u,
            err_h1_u2: out.errors.h1_u2,
            eta: out.indicators.eta,
            eta2: out.indicators.eta2,
            gmres_its: out.report.iterations,
            time_s,
            n: out.sys.n(),
            n2: out.sys.n2(),
            m: out.sys.m(),
            bg_cells: out.disc.bg_mesh().num_cells(),
            im_cells: out.disc.im_mesh().num_cells(),
            report: out.report.clone(),
            marked_bg: 0,
            marked_bg_cut: 0,
            marked_im: 0,
        }
    }
}

/// A study that stopped early; `records` holds the completed levels.
#[derive(Debug)]
pub struct PartialRun {
    pub records: Vec<LevelRecord>,
    pub error: FdlmError,
}

impl fmt::Display for PartialRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} completed levels)", self.error, self.records.len())
    }
}

impl std::error::Error for PartialRun {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Mesh sequence of a uniform study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformConfig {
    pub coupling: CouplingConfig,
    pub solver: SolverConfig,
    pub levels: usize,
    /// Subdivisions per axis of the coarsest background mesh.
    pub coarse_n: usize,
    /// Refinement depth of the coarsest immersed mesh; `h₂/h` stays nearly fixed.
    pub immersed_level: usize,
}

impl UniformConfig {
    pub fn new(coupling: CouplingConfig, solver: SolverConfig, levels: usize) -> Self {
        Self {
            coupling,
            solver,
            levels,
            coarse_n: 4,
            immersed_level: 1,
        }
    }
}

/// Background hierarchy and immersed meshes for levels `0..levels`.
pub fn uniform_meshes(cfg: &UniformConfig) -> Result<(MeshHierarchy, Vec<Arc<Mesh>>)> {
    if cfg.levels == 0 {
        return Err(FdlmError::invalid("at least one level is required"));
    }
    let coarse = build_rect_mesh(benchmark::background_box(), cfg.coarse_n)?;
    let h = MeshHierarchy::uniform(coarse, cfg.levels - 1);
    let mut im = vec![Arc::new(build_disk_mesh(benchmark::disk(), cfg.immersed_level)?)];
    for _ in 1..cfg.levels {
        let next = crate::mesh::uniform_refine(im.last().expect("nonempty"));
        im.push(Arc::new(next));
    }
    Ok((h, im))
}

/// Solves the benchmark on `cfg.levels` uniformly refined mesh pairs.
/// `observe` sees every completed level (e.g. to write VTK files).
pub fn uniform_study(
    cfg: &UniformConfig,
    data: &ProblemData,
    mut observe: impl FnMut(&LevelOutcome, &LevelRecord) -> Result<()>,
) -> std::result::Result<Vec<LevelRecord>, PartialRun> {
    let mut records = Vec::new();
    let meshes = uniform_meshes(cfg);
    let (h, im) = match meshes {
        Ok(m) => m,
        Err(error) => return Err(PartialRun { records, error }),
    };
    for level in 0..cfg.levels {
        let t0 = Instant::now();
        let step = || -> Result<(LevelOutcome, f64)> {
            let disc = Discretization::new(h.meshes[level].clone(), im[level].clone(), cfg.coupling)?;
            let sub = h.truncated(level + 1);
            let out = solve_level(disc, data, &cfg.solver, Some(&sub))?;
            Ok((out, t0.elapsed().as_secs_f64()))
        };
        match step() {
            Ok((out, time)) => {
                let rec = LevelRecord::from_outcome(level, &out, time);
                log::info!(
                    "level {level}: ndof {} its {} errH1 {:.3e} eta {:.3e}",
                    rec.ndof,
                    rec.gmres_its,
                    rec.err_h1_u,
                    rec.eta + rec.eta2
                );
                if let Err(error) = observe(&out, &rec) {
                    return Err(PartialRun { records, error });
                }
                records.push(rec);
            }
            Err(error) => return Err(PartialRun { records, error }),
        }
    }
    Ok(records)
}

/// EOC of the three error columns, h-based.
pub fn uniform_rates(records: &[LevelRecord]) -> [Vec<Option<f64>>; 3] {
    let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
    [
        benchmark::eoc(&records.iter().map(|r| r.err_l2_u).collect::<Vec<_>>(), &hs),
        benchmark::eoc(&records.iter().map(|r| r.err_h1_u).collect::<Vec<_>>(), &hs),
        benchmark::eoc(&records.iter().map(|r| r.err_h1_u2).collect::<Vec<_>>(), &hs),
    ]
}

/// EOC of the three error columns, with `h = ndof^{-1/2}`.
pub fn dof_rates(records: &[LevelRecord]) -> [Vec<Option<f64>>; 3] {
    let nd: Vec<usize> = records.iter().map(|r| r.ndof).collect();
    [
        benchmark::eoc_dofs(&records.iter().map(|r| r.err_l2_u).collect::<Vec<_>>(), &nd),
        benchmark::eoc_dofs(&records.iter().map(|r| r.err_h1_u).collect::<Vec<_>>(), &nd),
        benchmark::eoc_dofs(&records.iter().map(|r| r.err_h1_u2).collect::<Vec<_>>(), &nd),
    ]
}
