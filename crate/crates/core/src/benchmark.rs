//! The immersed circle benchmark: unit disk in `[-1.4, 1.4]²`, `ν = 1`,
//! `ν₂ = 10`, with a closed-form solution.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::fem::FeSpace;
use crate::geometry::{BBox, DiskGeometry, Point2};
use crate::mesh::Mesh;
use crate::quadrature::QuadRule;
use crate::solver::{ProblemData, ScalarFn};

pub const HALF_WIDTH: f64 = 1.4;
pub const NU: f64 = 1.0;
pub const NU2: f64 = 10.0;

/// Quadrature degree of the error integrals.
pub const ERROR_QUAD_DEGREE: usize = 6;

pub fn background_box() -> BBox {
    BBox::square(HALF_WIDTH)
}

pub fn disk() -> DiskGeometry {
    DiskGeometry::unit()
}

/// `u₁ = (4 − r²)/4` outside the unit circle, `u₂ = (31 − r²)/40` inside.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSolution;

impl ExactSolution {
    pub fn inside(&self, p: Point2) -> bool {
        p.x * p.x + p.y * p.y <= 1.0
    }

    pub fn u1(&self, p: Point2) -> f64 {
        (4.0 - p.x * p.x - p.y * p.y) / 4.0
    }

    pub fn u2(&self, p: Point2) -> f64 {
        (31.0 - p.x * p.x - p.y * p.y) / 40.0
    }

    pub fn grad_u1(&self, p: Point2) -> Point2 {
        -0.5 * p
    }

    pub fn grad_u2(&self, p: Point2) -> Point2 {
        -0.05 * p
    }

    /// The composite solution on Ω.
    pub fn u(&self, p: Point2) -> f64 {
        if self.inside(p) {
            self.u2(p)
        } else {
            self.u1(p)
        }
    }

    pub fn grad_u(&self, p: Point2) -> Point2 {
        if self.inside(p) {
            self.grad_u2(p)
        } else {
            self.grad_u1(p)
        }
    }
}

/// `f ≡ 1` on Ω and `f₂ ≡ 1` on Ω₂.
pub fn benchmark_rhs() -> (ScalarFn, ScalarFn) {
    (Arc::new(|_| 1.0), Arc::new(|_| 1.0))
}

/// Coefficients, sources and the Dirichlet trace of `u₁` on ∂Ω.
pub fn benchmark_problem() -> ProblemData {
    let (f, f2) = benchmark_rhs();
    ProblemData::new(NU, NU2, f, f2).with_boundary(Arc::new(|p| ExactSolution.u1(p)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `‖u − u_h‖_{0,Ω}`
    pub l2_u: f64,
    /// `‖u − u_h‖_{1,Ω}`
    pub h1_u: f64,
    /// `‖u₂ − u₂,h‖_{1,Ω₂}`
    pub h1_u2: f64,
}

/// Squared L² and H¹-seminorm errors of a finite element function against
/// `(value, gradient)` of an exact field.
fn squared_errors(
    space: &FeSpace,
    coeffs: &[f64],
    exact: &(dyn Fn(Point2) -> (f64, Point2) + Sync),
    degree: usize,
) -> (f64, f64) {
    let q = QuadRule::triangle(degree).expect("valid degree");
    let mesh: &Mesh = space.mesh();
    let parts: Vec<(f64, f64)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let t = mesh.triangle(c);
            let area = mesh.cell_area(c);
            let (mut l2, mut h1) = (0.0, 0.0);
            for (p, w) in q.map(&t) {
                let (v, g) = space.eval(coeffs, c, p);
                let (ve, ge) = exact(p);
                l2 += w * (v - ve).powi(2);
                let d = g - ge;
                h1 += w * d.dot(d);
            }
            (area * l2, area * h1)
        })
        .collect();
    let l2 = crate::estimator::neumaier_sum(parts.iter().map(|p| p.0));
    let h1 = crate::estimator::neumaier_sum(parts.iter().map(|p| p.1));
    (l2, h1)
}

/// Errors of `(u_h, u₂,h)`; `u_nodal` holds the background field on all
/// vertices of `v_full`. Background quadrature points are classified by the
/// analytic circle.
pub fn error_norms(
    v_full: &FeSpace,
    u_nodal: &[f64],
    v2: &FeSpace,
    u2: &[f64],
    exact: &ExactSolution,
) -> ErrorNorms {
    let (l2, semi) = squared_errors(v_full, u_nodal, &|p| (exact.u(p), exact.grad_u(p)), ERROR_QUAD_DEGREE);
    let (l2_2, semi_2) = squared_errors(v2, u2, &|p| (exact.u2(p), exact.grad_u2(p)), ERROR_QUAD_DEGREE);
    ErrorNorms {
        l2_u: l2.sqrt(),
        h1_u: (l2 + semi).sqrt(),
        h1_u2: (l2_2 + semi_2).sqrt(),
    }
}

/// Error norms of `(u_h, u₂,h)` against arbitrary exact fields.
pub fn error_norms_with(
    v_full: &FeSpace,
    u_nodal: &[f64],
    v2: &FeSpace,
    u2: &[f64],
    exact_u: &(dyn Fn(Point2) -> (f64, Point2) + Sync),
    exact_u2: &(dyn Fn(Point2) -> (f64, Point2) + Sync),
) -> ErrorNorms {
    let (l2, semi) = squared_errors(v_full, u_nodal, exact_u, ERROR_QUAD_DEGREE);
    let (l2_2, semi_2) = squared_errors(v2, u2, exact_u2, ERROR_QUAD_DEGREE);
    ErrorNorms {
        l2_u: l2.sqrt(),
        h1_u: (l2 + semi).sqrt(),
        h1_u2: (l2_2 + semi_2).sqrt(),
    }
}

/// `rate_ℓ = log(e_{ℓ−1}/e_ℓ) / log(h_{ℓ−1}/h_ℓ)`; `None` where undefined.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| {
            let ok = e[0] > 0.0 && e[1] > 0.0 && h[0] > 0.0 && h[1] > 0.0 && h[0] != h[1];
            ok.then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        })
        .collect()
}

/// Rates with `h` replaced by `ndof^{-1/2}`.
pub fn eoc_dofs(errors: &[f64], ndofs: &[usize]) -> Vec<Option<f64>> {
    let hs: Vec<f64> = ndofs.iter().map(|&n| (n as f64).powf(-0.5)).collect();
    eoc(errors, &hs)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{BasisFamily, Constraint};
    use crate::mesh::build_rect_mesh;

    #[test]
    fn interface_continuity_and_flux() {
        let e = ExactSolution;
        for k in 0..100 {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 100.0;
            let p = Point2::new(th.cos(), th.sin());
            assert!((e.u1(p) - 0.75).abs() <= 1e-13);
            assert!((e.u2(p) - 0.75).abs() <= 1e-13);
            // radial derivatives: n = p on the unit circle
            assert!((NU * e.grad_u1(p).dot(p) + 0.5).abs() <= 1e-13);
            assert!((NU2 * e.grad_u2(p).dot(p) + 0.5).abs() <= 1e-13);
        }
    }

    #[test]
    fn sources_from_laplacian() {
        // Δ(a − r²)/b = −4/b
        assert_eq!(-NU * (-4.0 / 4.0), 1.0);
        assert_eq!(-NU2 * (-4.0 / 40.0), 1.0);
        let (f, f2) = benchmark_rhs();
        let p = Point2::new(0.3, -0.2);
        assert_eq!(f2(p) - f(p), 0.0);
    }

    #[test]
    fn constant_field_has_no_error() {
        let m = Arc::new(build_rect_mesh(BBox::square(1.4), 4).unwrap());
        let s = FeSpace::new(m, BasisFamily::P1, Constraint::None);
        let c = s.interpolate(|_| 2.5);
        let e = error_norms_with(&s, &c, &s, &c, &|_| (2.5, Point2::default()), &|_| {
            (2.5, Point2::default())
        });
        assert!(e.l2_u <= 1e-13 && e.h1_u <= 1e-13 && e.h1_u2 <= 1e-13);
    }

    #[test]
    fn zero_field_gives_norm_of_u1() {
        let m = Arc::new(
            build_rect_mesh(BBox::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)), 4).unwrap(),
        );
        let s = FeSpace::new(m, BasisFamily::P1, Constraint::None);
        let z = vec![0.0; s.ndof()];
        let e = ExactSolution;
        let r = error_norms_with(&s, &z, &s, &z, &|p| (e.u1(p), e.grad_u1(p)), &|_| (0.0, Point2::default()));
        // ∫_{[0,1]²} ((4 − x² − y²)/4)² = 127/180
        assert!((r.l2_u - (127.0f64 / 180.0).sqrt()).abs() < 1e-13);
        // ∫ (x² + y²)/4 = 1/6
        assert!((r.h1_u - (127.0f64 / 180.0 + 1.0 / 6.0).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn rates() {
        assert_eq!(eoc(&[0.1, 0.05], &[1.0, 0.5]), vec![Some(1.0)]);
        assert_eq!(eoc(&[0.1, 0.1], &[1.0, 0.5]), vec![Some(0.0)]);
        let r = eoc(&[1.0, 0.5f64.sqrt()], &[1.0, 0.5])[0].unwrap();
        assert!((r - 0.5).abs() < 1e-15);
        assert_eq!(eoc(&[0.1, 0.0], &[1.0, 0.5]), vec![None]);
        let d = eoc_dofs(&[0.1, 0.05], &[100, 400])[0].unwrap();
        assert!((d - 1.0).abs() < 1e-14);
        let s = log_log_slope(&[1.0, 10.0, 100.0], &[1.0, 0.1, 0.01]).unwrap();
        assert!((s + 1.0).abs() < 1e-14);
    }
}
