//! SOLVE, ESTIMATE, MARK, REFINE with Dörfler bulk marking on both meshes.

use std::cmp::Ordering;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::error::{FdlmError, Result};
use crate::intersection::IntersectionMap;
use crate::mesh::{bisect, Mesh};
use crate::solver::{CouplingConfig, Discretization, ProblemData};
use crate::study::{solve_level, LevelOutcome, LevelRecord, PartialRun, SolverConfig};

/// Relative uncovered area below which a hosting cell counts as fully covered.
pub const CUT_AREA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdaptConfig {
    pub alpha1: f64,
    /// Stop once `η + η₂ ≤ tol`.
    pub tol: f64,
    pub max_loops: usize,
    pub coupling: CouplingConfig,
    pub solver: SolverConfig,
}

impl AdaptConfig {
    pub fn new(coupling: CouplingConfig, solver: SolverConfig) -> Self {
        Self {
            alpha1: 0.6,
            tol: 1e-2,
            max_loops: 10,
            coupling,
            solver,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha1) {
            return Err(FdlmError::invalid(format!("alpha1 = {} outside [0, 1]", self.alpha1)));
        }
        if !(self.tol > 0.0) {
            return Err(FdlmError::invalid(format!("tol = {} must be positive", self.tol)));
        }
        if self.max_loops == 0 {
            return Err(FdlmError::invalid("max_loops must be at least 1"));
        }
        Ok(())
    }
}

/// Minimal set of cells, by descending indicator, whose squared indicators
/// reach `alpha1² · Σ η_E²`. Ties go to the lower cell id. Returned sorted.
pub fn dorfler_mark(indicators: &[f64], alpha1: f64) -> Vec<usize> {
    let total: f64 = indicators.iter().map(|e| e * e).sum();
    let threshold = alpha1 * alpha1 * total;
    if threshold <= 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| {
        indicators[b]
            .partial_cmp(&indicators[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut marked = Vec::new();
    let mut acc = 0.0;
    for c in order {
        if acc >= threshold || indicators[c] == 0.0 {
            break;
        }
        acc += indicators[c] * indicators[c];
        marked.push(c);
    }
    // Summation order differs from `total`; α₁ = 1 must still take every nonzero cell.
    if alpha1 >= 1.0 {
        marked = (0..indicators.len()).filter(|&c| indicators[c] != 0.0).collect();
    }
    marked.sort_unstable();
    marked
}

/// Background cells partially covered by the immersed mesh.
pub fn is_cut_cell(imap: &IntersectionMap, bg: &Mesh, cell: usize) -> bool {
    if imap.hosted(cell).is_empty() {
        return false;
    }
    let area = bg.cell_area(cell);
    area - imap.covered_area(cell) > CUT_AREA_TOL * area
}

fn count_cut(disc: &Discretization, marked: &[usize]) -> usize {
    marked.iter().filter(|&&c| is_cut_cell(&disc.imap, disc.bg_mesh(), c)).count()
}

/// Runs the adaptive loop from the given initial meshes.
pub fn adaptive_loop(
    cfg: &AdaptConfig,
    data: &ProblemData,
    bg0: Arc<Mesh>,
    im0: Arc<Mesh>,
    mut observe: impl FnMut(&LevelOutcome, &LevelRecord) -> Result<()>,
) -> std::result::Result<Vec<LevelRecord>, PartialRun> {
    let mut records = Vec::new();
    if let Err(error) = cfg.validate() {
        return Err(PartialRun { records, error });
    }
    let (mut bg, mut im) = (bg0, im0);
    for level in 0..cfg.max_loops {
        let t0 = Instant::now();
        let out = Discretization::new(bg.clone(), im.clone(), cfg.coupling)
            .and_then(|disc| solve_level(disc, data, &cfg.solver, None));
        let out = match out {
            Ok(o) => o,
            Err(error) => return Err(PartialRun { records, error }),
        };
        let mut rec = LevelRecord::from_outcome(level, &out, t0.elapsed().as_secs_f64());
        let done = rec.eta + rec.eta2 <= cfg.tol || level + 1 == cfg.max_loops;
        let marked_bg = dorfler_mark(&out.indicators.eta_e, cfg.alpha1);
        let marked_im = dorfler_mark(&out.indicators.eta_e2, cfg.alpha1);
        rec.marked_bg = marked_bg.len();
        rec.marked_bg_cut = count_cut(&out.disc, &marked_bg);
        rec.marked_im = marked_im.len();
        log::info!(
            "loop {level}: ndof {} eta {:.3e} marked {}/{} ({} cut)",
            rec.ndof,
            rec.eta + rec.eta2,
            rec.marked_bg,
            rec.marked_im,
            rec.marked_bg_cut
        );
        if let Err(error) = observe(&out, &rec) {
            return Err(PartialRun { records, error });
        }
        records.push(rec);
        if done {
            break;
        }
        if marked_bg.is_empty() && marked_im.is_empty() {
            log::warn!("nothing marked at loop {level}; stopping");
            break;
        }
        bg = Arc::new(bisect(&bg, &marked_bg).mesh);
        im = Arc::new(bisect(&im, &marked_im).mesh);
    }
    Ok(records)
}
