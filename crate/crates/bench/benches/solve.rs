use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fdlm_bench::{coupling, problem, uniform_pairs};
use fdlm_core::coupling::{AssemblyMode, CouplingForm};
use fdlm_core::solver::{
    assemble_system, solve_system, Discretization, ElementFamily, GmresParams, InnerA, MultigridParams, PrecondConfig,
    PrecondVariant,
};

fn solve(c: &mut Criterion) {
    let level = 3;
    let (h, im) = uniform_pairs(level + 1);
    let data = problem();
    let cc = coupling(ElementFamily::P1BubbleP0, CouplingForm::L2, AssemblyMode::Exact);
    let disc = Discretization::new(h.meshes[level].clone(), im[level].clone(), cc).unwrap();
    let sys = assemble_system(&data, &disc).unwrap();
    let mut g = c.benchmark_group("gmres_level3");
    g.sample_size(10);
    for (name, cfg) in [
        ("diag_dd", PrecondConfig::new(PrecondVariant::Diag, InnerA::Direct)),
        ("tri_dd", PrecondConfig::new(PrecondVariant::Tri, InnerA::Direct)),
        ("tri_md", PrecondConfig::new(PrecondVariant::Tri, InnerA::Multigrid(MultigridParams::default()))),
    ] {
        g.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| solve_system(&sys, cfg, Some(&h), data.nu, &GmresParams::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, solve);
criterion_main!(benches);
