//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use fdlm_core::benchmark;
use fdlm_core::coupling::{AssemblyMode, CouplingForm};
use fdlm_core::mesh::Mesh;
use fdlm_core::solver::{CouplingConfig, ElementFamily, MeshHierarchy};
use fdlm_core::study::{uniform_meshes, SolverConfig, UniformConfig};

/// Background hierarchy and immersed meshes of the uniform circle study.
pub fn uniform_pairs(levels: usize) -> (MeshHierarchy, Vec<Arc<Mesh>>) {
    let cfg = UniformConfig::new(coupling(ElementFamily::P1BubbleP0, CouplingForm::L2, AssemblyMode::Exact), SolverConfig::default(), levels);
    uniform_meshes(&cfg).expect("benchmark meshes")
}

pub fn coupling(element: ElementFamily, form: CouplingForm, mode: AssemblyMode) -> CouplingConfig {
    CouplingConfig::new(element, form, mode).expect("compatible configuration")
}

pub fn problem() -> fdlm_core::solver::ProblemData {
    benchmark::benchmark_problem()
}
