//! Invariant suite behind `fdlm check`.

use std::f64::consts::TAU;

use fdlm_core::benchmark::{self, ExactSolution, NU, NU2};
use fdlm_core::coupling::{assemble_c1, assemble_c2, vertex_row_sums, AssemblyMode};
use fdlm_core::geometry::Point2;
use fdlm_core::solver::{
    assemble_system, solve_system, CouplingConfig, Discretization, InnerA, PrecondConfig, PrecondVariant,
};
use fdlm_core::study::{uniform_meshes, SolverConfig, UniformConfig};

struct Suite {
    failures: usize,
}

impl Suite {
    fn report(&mut self, name: &str, value: f64, limit: f64) {
        let ok = value <= limit;
        if !ok {
            self.failures += 1;
        }
        println!("{name}: {} ({value:.3e} <= {limit:e})", if ok { "PASS" } else { "FAIL" });
    }
}

pub fn run(coupling: CouplingConfig, levels: usize) -> anyhow::Result<bool> {
    let mut s = Suite { failures: 0 };

    let (mut jump, mut flux): (f64, f64) = (0.0, 0.0);
    for k in 0..100 {
        let t = TAU * k as f64 / 100.0;
        let p = Point2::new(t.cos(), t.sin());
        jump = jump.max((ExactSolution.u1(p) - ExactSolution.u2(p)).abs());
        flux = flux.max((NU * ExactSolution.grad_u1(p).dot(p) - NU2 * ExactSolution.grad_u2(p).dot(p)).abs());
    }
    s.report("exact solution continuity on the interface", jump, 1e-13);
    s.report("exact solution flux balance on the interface", flux, 1e-13);

    let data = benchmark::benchmark_problem();
    let (h, im) = uniform_meshes(&UniformConfig::new(coupling, SolverConfig::default(), levels))?;
    for level in 0..levels {
        let bg = h.meshes[level].clone();
        let conforming = bg.check_conformity().is_ok() && im[level].check_conformity().is_ok();
        s.report(&format!("level {level}: mesh conformity"), if conforming { 0.0 } else { 1.0 }, 0.0);

        let disc = Discretization::new(bg, im[level].clone(), coupling)?;
        s.report(
            &format!("level {level}: intersection area defect"),
            disc.imap.max_area_defect(disc.im_mesh()),
            1e-12,
        );

        let c1 = assemble_c1(&disc.lambda, &disc.v_full, &disc.index, Some(&disc.imap), coupling.form, AssemblyMode::Exact)?;
        let c2 = assemble_c2(&disc.lambda, &disc.v2, coupling.form)?;
        let sums = vertex_row_sums(&c1, &disc.v_full)
            .iter()
            .zip(&vertex_row_sums(&c2, &disc.v2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        s.report(&format!("level {level}: column-sum identity"), sums, 1e-12);

        let sys = assemble_system(&data, &disc)?;
        let sub = h.truncated(level + 1);
        let solve = |variant| {
            let cfg = SolverConfig::default();
            solve_system(&sys, &PrecondConfig::new(variant, InnerA::Direct), Some(&sub), data.nu, &cfg.gmres)
        };
        let (x_tri, tri) = solve(PrecondVariant::Tri)?;
        let (x_diag, diag) = solve(PrecondVariant::Diag)?;
        s.report(&format!("level {level}: constraint residual"), sys.constraint_residual(&x_tri), 1e-8);
        let diff = x_tri.iter().zip(&x_diag).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = x_tri.iter().map(|a| a * a).sum::<f64>().sqrt();
        s.report(&format!("level {level}: tri/diag solution difference"), diff / norm, 1e-8);
        s.report(
            &format!("level {level}: iterations tri/diag"),
            tri.iterations as f64 / diag.iterations as f64,
            1.1,
        );
    }
    println!("{} check(s) failed", s.failures);
    Ok(s.failures == 0)
}
