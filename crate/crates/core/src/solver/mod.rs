//! Block saddle-point system, preconditioners and Krylov solver.

mod direct;
mod gmres;
mod multigrid;
mod precond;
mod system;

use std::time::Instant;

use serde::Serialize;

pub use direct::DirectSolver;
pub use gmres::{gmres, GmresParams, Identity, LinearOperator, Preconditioner};
pub use multigrid::{MeshHierarchy, Multigrid, MultigridParams};
pub use precond::{BlockPreconditioner, InnerA, PrecondConfig, PrecondVariant};
pub use system::{
    assemble_system, BlockSystem, CouplingConfig, Discretization, ElementFamily, ProblemData, ScalarFn,
};

use crate::error::Result;

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub assembly_s: f64,
    pub setup_s: f64,
    pub solve_s: f64,
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual `‖b − Mx‖/‖b‖` at exit.
    pub relative_residual: f64,
    /// Same quantity recomputed from scratch on the unpreconditioned system.
    pub true_relative_residual: f64,
    pub converged: bool,
    pub timings: Timings,
    /// Relative residual after every iteration (index 0 is the initial one).
    pub history: Vec<f64>,
}

/// Prepares the preconditioner and runs GMRES from a zero initial guess.
pub fn solve_system(
    sys: &BlockSystem,
    cfg: &PrecondConfig,
    hierarchy: Option<&MeshHierarchy>,
    nu: f64,
    params: &GmresParams,
) -> Result<(Vec<f64>, SolveReport)> {
    let t0 = Instant::now();
    let pc = BlockPreconditioner::new(sys, cfg, hierarchy, nu)?;
    let setup_s = t0.elapsed().as_secs_f64();
    let mut x = vec![0.0; sys.dim()];
    let b = sys.rhs();
    let mut report = gmres(sys, &pc, &b, &mut x, params).map_err(|e| match e {
        crate::FdlmError::NoConvergence(mut r) => {
            r.timings.assembly_s = sys.assembly_s;
            r.timings.setup_s = setup_s;
            crate::FdlmError::NoConvergence(r)
        }
        e => e,
    })?;
    report.timings.assembly_s = sys.assembly_s;
    report.timings.setup_s = setup_s;
    Ok((x, report))
}
