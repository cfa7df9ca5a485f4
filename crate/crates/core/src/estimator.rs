//! Residual error indicators on the background and the immersed mesh.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FdlmError, Result};
use crate::fem::{project_pc, FeSpace, DEFAULT_QUAD_DEGREE};
use crate::geometry::{triangle_area, Point2};
use crate::intersection::{fan_triangulate, locate_point, BoxIndex, IntersectionMap};
use crate::mesh::{EdgeFlag, Mesh};
use crate::quadrature::{GaussLegendre, QuadRule};
use crate::solver::{Discretization, ProblemData};

/// Degree of the rule for the cross-mesh H¹ difference (cubic bubbles squared).
const CROSS_QUAD_DEGREE: usize = 6;

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// `sqrt(Σ v²)` with compensated summation.
pub fn global_estimator(values: &[f64]) -> f64 {
    neumaier_sum(values.iter().map(|v| v * v)).sqrt()
}

/// The discrete multiplier extended by zero outside the immersed mesh.
pub struct ExtendedMultiplier<'a> {
    space: &'a FeSpace,
    coeffs: &'a [f64],
    index: BoxIndex,
}

impl<'a> ExtendedMultiplier<'a> {
    pub fn new(space: &'a FeSpace, coeffs: &'a [f64]) -> Self {
        Self {
            space,
            coeffs,
            index: BoxIndex::build(space.mesh()),
        }
    }

    pub fn eval(&self, p: Point2) -> f64 {
        match locate_point(&self.index, self.space.mesh(), p) {
            Some(c) => self.space.eval(self.coeffs, c, p).0,
            None => 0.0,
        }
    }
}

/// Per-cell indicators and their global roots.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IndicatorField {
    pub eta_e: Vec<f64>,
    pub eta_e2: Vec<f64>,
    pub osc_e: Vec<f64>,
    pub osc_e2: Vec<f64>,
    pub eta: f64,
    pub eta2: f64,
}

impl IndicatorField {
    pub fn osc(&self) -> f64 {
        global_estimator(&self.osc_e)
    }

    pub fn osc2(&self) -> f64 {
        global_estimator(&self.osc_e2)
    }
}

/// `h_E ‖g − Π₀g‖_{0,E}` on every cell.
pub fn oscillation(g: &(dyn Fn(Point2) -> f64 + Sync), mesh: &Mesh) -> Vec<f64> {
    let q = QuadRule::triangle(DEFAULT_QUAD_DEGREE).expect("degree 4 rule");
    let pc = project_pc(g, mesh);
    (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let t = mesh.triangle(c);
            let s: f64 = q.map(&t).map(|(p, w)| w * (g(p) - pc[c]).powi(2)).sum();
            mesh.cell_diameter(c) * (mesh.cell_area(c) * s).max(0.0).sqrt()
        })
        .collect()
}

/// `(osc_E, osc_E2)`.
pub fn oscillations(data: &ProblemData, bg: &Mesh, im: &Mesh) -> (Vec<f64>, Vec<f64>) {
    (oscillation(&*data.f, bg), oscillation(&*data.f2_minus_f(), im))
}

fn unit_normal(mesh: &Mesh, edge: usize) -> Point2 {
    let [a, b] = mesh.edges()[edge].vertices;
    let d = mesh.vertices()[b] - mesh.vertices()[a];
    (1.0 / d.norm()) * Point2::new(d.y, -d.x)
}

/// Squared L² norms of the flux jumps `[[coeff ∇w·n]]` over every edge, with
/// the one-sided flux on boundary edges.
fn edge_jumps(space: &FeSpace, coeffs: &[f64], coeff: f64) -> Vec<f64> {
    let mesh = space.mesh();
    let gl = GaussLegendre::new(3);
    (0..mesh.edges().len())
        .into_par_iter()
        .map(|e| {
            let edge = &mesh.edges()[e];
            let [a, b] = edge.vertices;
            let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
            let n = unit_normal(mesh, e);
            let len = pa.dist(pb);
            let mut s = 0.0;
            for (t, w) in gl.unit_nodes() {
                let p = pa + t * (pb - pa);
                let mut j = 0.0;
                if let Some(c0) = edge.cells[0] {
                    j += space.eval(coeffs, c0, p).1.dot(n);
                }
                if let Some(c1) = edge.cells[1] {
                    j -= space.eval(coeffs, c1, p).1.dot(n);
                }
                s += w * (coeff * j).powi(2);
            }
            len * s
        })
        .collect()
}

/// `η_E` on every background cell. `u_nodal` is the background field on all
/// vertices of `disc.v_full`.
pub fn background_indicator(
    disc: &Discretization,
    u_nodal: &[f64],
    lambda: &[f64],
    data: &ProblemData,
) -> Result<Vec<f64>> {
    let bg = disc.bg_mesh();
    let imap: &IntersectionMap = &disc.imap;
    if imap.num_immersed() != disc.im_mesh().num_cells() {
        return Err(FdlmError::Internal("intersection data does not match the immersed mesh".into()));
    }
    let v = &disc.v_full;
    let q = QuadRule::triangle(DEFAULT_QUAD_DEGREE)?;
    let pf = project_pc(&*data.f, bg);
    let jumps = edge_jumps(v, u_nodal, data.nu);
    let out = (0..bg.num_cells())
        .into_par_iter()
        .map(|c| {
            let t = bg.triangle(c);
            let area = bg.cell_area(c);
            let h = bg.cell_diameter(c);
            // r = Π₀f + ∇·(ν∇u_h) − λ̃_h; λ̃_h only lives on the hosted pieces
            let base = |p: Point2| pf[c] + data.nu * v.laplacian(u_nodal, c, p);
            let mut r2 = area * q.map(&t).map(|(p, w)| w * base(p).powi(2)).sum::<f64>();
            for &(e2, k) in imap.hosted(c) {
                let piece = imap.piece(e2, k);
                for tri in fan_triangulate(&piece.polygon)? {
                    let a = triangle_area(&tri);
                    for (p, w) in q.map(&tri) {
                        let l = disc.lambda.eval(lambda, e2, p).0;
                        r2 += a * w * (l * l - 2.0 * base(p) * l);
                    }
                }
            }
            let mut eta2 = h * h * r2.max(0.0);
            for e in bg.cell_edges(c) {
                if !bg.edges()[e].is_boundary() {
                    eta2 += 0.5 * bg.edge_length(e) * jumps[e];
                }
            }
            Ok(eta2.sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(out)
}

/// `η_E2` on every immersed cell.
pub fn immersed_indicator(
    disc: &Discretization,
    u_nodal: &[f64],
    u2: &[f64],
    lambda: &[f64],
    data: &ProblemData,
) -> Result<Vec<f64>> {
    let im = disc.im_mesh();
    let imap = &disc.imap;
    if imap.num_immersed() != im.num_cells() {
        return Err(FdlmError::Internal("intersection data does not match the immersed mesh".into()));
    }
    let coeff = data.nu2 - data.nu;
    let v2 = &disc.v2;
    let q = QuadRule::triangle(DEFAULT_QUAD_DEGREE)?;
    let qx = QuadRule::triangle(CROSS_QUAD_DEGREE)?;
    let g = data.f2_minus_f();
    let pg = project_pc(&*g, im);
    let jumps = edge_jumps(v2, u2, coeff);
    (0..im.num_cells())
        .into_par_iter()
        .map(|c| {
            let t = im.triangle(c);
            let area = im.cell_area(c);
            let h = im.cell_diameter(c);
            let r2: f64 = area
                * q.map(&t)
                    .map(|(p, w)| {
                        let r = pg[c] + disc.lambda.eval(lambda, c, p).0 + coeff * v2.laplacian(u2, c, p);
                        w * r * r
                    })
                    .sum::<f64>();
            let mut cross = 0.0;
            for piece in imap.pieces(c) {
                for tri in fan_triangulate(&piece.polygon)? {
                    let a = triangle_area(&tri);
                    for (p, w) in qx.map(&tri) {
                        let (ub, gb) = disc.v_full.eval(u_nodal, piece.host, p);
                        let (ui, gi) = v2.eval(u2, c, p);
                        let d = gb - gi;
                        cross += a * w * ((ub - ui).powi(2) + d.dot(d));
                    }
                }
            }
            let mut eta2 = h * h * r2 + cross;
            for e in im.cell_edges(c) {
                let edge = &im.edges()[e];
                let weight = match edge.flag {
                    EdgeFlag::Interior => 0.5,
                    EdgeFlag::Interface => 1.0,
                    EdgeFlag::OuterBoundary => 0.0,
                };
                eta2 += weight * im.edge_length(e) * jumps[e];
            }
            Ok(eta2.sqrt())
        })
        .collect()
}

/// All indicators of a solved state.
pub fn estimate(
    disc: &Discretization,
    u_nodal: &[f64],
    u2: &[f64],
    lambda: &[f64],
    data: &ProblemData,
) -> Result<IndicatorField> {
    let eta_e = background_indicator(disc, u_nodal, lambda, data)?;
    let eta_e2 = immersed_indicator(disc, u_nodal, u2, lambda, data)?;
    let (osc_e, osc_e2) = oscillations(data, disc.bg_mesh(), disc.im_mesh());
    Ok(IndicatorField {
        eta: global_estimator(&eta_e),
        eta2: global_estimator(&eta_e2),
        eta_e,
        eta_e2,
        osc_e,
        osc_e2,
    })
}
