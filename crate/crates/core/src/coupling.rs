//! Interface matrices `C₂` (multiplier against the immersed field) and `C₁`
//! (multiplier against the background field, across non-matching meshes).
//!
//! Rows are multiplier dofs, columns are field dofs.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FdlmError, Result};
use crate::fem::{assemble_cells, eval_local, BasisFamily, FeSpace, Local};
use crate::geometry::{triangle_area, Point2};
use crate::intersection::{fan_triangulate, locate_point, BoxIndex, IntersectionMap};
use crate::quadrature::QuadRule;
use crate::sparse::CsrMatrix;

/// Quadrature degree used on the intersection triangles and for `C₂`.
pub const EXACT_QUAD_DEGREE: usize = 4;
/// Default degree of the per-cell rule of the inexact procedure.
pub const DEFAULT_INEXACT_DEGREE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingForm {
    /// `c(μ, v) = (μ, v)`
    L2,
    /// `c(μ, v) = (μ, v) + (∇μ, ∇v)`
    H1,
}

impl fmt::Display for CouplingForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L2 => "l2",
            Self::H1 => "h1",
        })
    }
}

impl FromStr for CouplingForm {
    type Err = FdlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Self::L2),
            "h1" => Ok(Self::H1),
            _ => Err(FdlmError::invalid(format!("unknown coupling form '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssemblyMode {
    /// Composite quadrature on the intersection polygons.
    Exact,
    /// One rule of the given degree per immersed cell.
    Inexact(usize),
}

impl AssemblyMode {
    pub fn validate(self) -> Result<Self> {
        match self {
            Self::Inexact(0) => Err(FdlmError::invalid("inexact quadrature degree must be >= 1")),
            m => Ok(m),
        }
    }
}

impl fmt::Display for AssemblyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exact => f.write_str("exact"),
            Self::Inexact(d) => write!(f, "inexact:{d}"),
        }
    }
}

impl FromStr for AssemblyMode {
    type Err = FdlmError;

    /// Accepts `exact`, `inexact` and `inexact:<degree>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.split_once(':') {
            None if s == "exact" => Ok(Self::Exact),
            None if s == "inexact" => Ok(Self::Inexact(DEFAULT_INEXACT_DEGREE)),
            Some(("inexact", d)) => {
                let d: usize = d
                    .parse()
                    .map_err(|_| FdlmError::invalid(format!("bad inexact degree '{d}'")))?;
                Self::Inexact(d).validate()
            }
            _ => Err(FdlmError::invalid(format!("unknown assembly mode '{s}'"))),
        }
    }
}

/// Rejects the H¹ form with a discontinuous multiplier space.
pub fn check_compatible(multiplier: BasisFamily, form: CouplingForm) -> Result<()> {
    if form == CouplingForm::H1 && !multiplier.is_continuous() {
        return Err(FdlmError::incompatible(
            "the H1 coupling form requires a continuous multiplier space",
        ));
    }
    Ok(())
}

#[inline]
fn form_value(form: CouplingForm, zv: f64, zg: Point2, fv: f64, fg: Point2) -> f64 {
    match form {
        CouplingForm::L2 => zv * fv,
        CouplingForm::H1 => zv * fv + zg.dot(fg),
    }
}

/// `(C₂)_{k,i} = c(ζ_k, ψ_i)` on the immersed mesh.
pub fn assemble_c2(lambda: &FeSpace, v2: &FeSpace, form: CouplingForm) -> Result<CsrMatrix> {
    check_compatible(lambda.family(), form)?;
    if !std::ptr::eq(lambda.mesh(), v2.mesh()) && lambda.mesh().cells() != v2.mesh().cells() {
        return Err(FdlmError::invalid("multiplier and immersed spaces live on different meshes"));
    }
    let q = QuadRule::triangle(EXACT_QUAD_DEGREE)?;
    let mesh = v2.mesh();
    Ok(assemble_cells(lambda.ndof(), v2.ndof(), mesh.num_cells(), |c| {
        let t = mesh.triangle(c);
        let area = triangle_area(&t);
        let dl = lambda.cell_dofs(c);
        let dv = v2.cell_dofs(c);
        let mut k = [[0.0; 4]; 4];
        for (p, w) in q.map(&t) {
            let bl = eval_local(lambda.family(), &t, p);
            let bv = eval_local(v2.family(), &t, p);
            for i in 0..dl.len {
                for j in 0..dv.len {
                    k[i][j] += w * form_value(form, bl.values[i], bl.grads[i], bv.values[j], bv.grads[j]);
                }
            }
        }
        let mut out = Local::with_capacity(dl.len * dv.len);
        for i in 0..dl.len {
            for j in 0..dv.len {
                if let (Some(r), Some(s)) = (dl.dofs[i], dv.dofs[j]) {
                    out.push((r, s, area * k[i][j]));
                }
            }
        }
        out
    }))
}

/// Accumulates `Σ w c(ζ, φ)` for the points of one immersed cell, grouped by
/// host background cell.
fn accumulate(
    lambda: &FeSpace,
    bg: &FeSpace,
    form: CouplingForm,
    e2: usize,
    samples: &[(Point2, f64, usize)],
    out: &mut Local,
) {
    let t2 = lambda.mesh().triangle(e2);
    let dl = lambda.cell_dofs(e2);
    let mut start = 0;
    while start < samples.len() {
        let host = samples[start].2;
        let mut end = start;
        while end < samples.len() && samples[end].2 == host {
            end += 1;
        }
        let t = bg.mesh().triangle(host);
        let db = bg.cell_dofs(host);
        let mut k = [[0.0; 4]; 4];
        for &(p, w, _) in &samples[start..end] {
            let bl = eval_local(lambda.family(), &t2, p);
            let bb = eval_local(bg.family(), &t, p);
            for i in 0..dl.len {
                for j in 0..db.len {
                    k[i][j] += w * form_value(form, bl.values[i], bl.grads[i], bb.values[j], bb.grads[j]);
                }
            }
        }
        for i in 0..dl.len {
            for j in 0..db.len {
                if let (Some(r), Some(s)) = (dl.dofs[i], db.dofs[j]) {
                    out.push((r, s, k[i][j]));
                }
            }
        }
        start = end;
    }
}

/// `(C₁)_{k,i} = c(ζ_k, φ_i|Ω₂)`.
///
/// The exact mode needs `imap`; the inexact mode locates every quadrature
/// node of every immersed cell in the background mesh through `index`.
pub fn assemble_c1(
    lambda: &FeSpace,
    bg: &FeSpace,
    index: &BoxIndex,
    imap: Option<&IntersectionMap>,
    form: CouplingForm,
    mode: AssemblyMode,
) -> Result<CsrMatrix> {
    check_compatible(lambda.family(), form)?;
    mode.validate()?;
    let im = lambda.mesh();
    let parts: Vec<Local> = match mode {
        AssemblyMode::Exact => {
            let imap = imap.ok_or_else(|| {
                FdlmError::invalid("exact coupling assembly requires an intersection map")
            })?;
            if imap.num_immersed() != im.num_cells() {
                return Err(FdlmError::invalid("intersection map does not match the immersed mesh"));
            }
            let q = QuadRule::triangle(EXACT_QUAD_DEGREE)?;
            (0..im.num_cells())
                .into_par_iter()
                .map(|e2| {
                    let mut samples = Vec::new();
                    for piece in imap.pieces(e2) {
                        for tri in fan_triangulate(&piece.polygon)? {
                            let a = triangle_area(&tri);
                            samples.extend(q.map(&tri).map(|(p, w)| (p, a * w, piece.host)));
                        }
                    }
                    let mut out = Local::new();
                    accumulate(lambda, bg, form, e2, &samples, &mut out);
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
        AssemblyMode::Inexact(degree) => {
            let q = QuadRule::triangle(degree)?;
            (0..im.num_cells())
                .into_par_iter()
                .map(|e2| {
                    let t2 = im.triangle(e2);
                    let a = triangle_area(&t2);
                    let mut samples = Vec::with_capacity(q.len());
                    let mut outside = Vec::new();
                    for (p, w) in q.map(&t2) {
                        match locate_point(index, bg.mesh(), p) {
                            Some(h) => samples.push((p, a * w, h)),
                            None => outside.push(p),
                        }
                    }
                    if !outside.is_empty() {
                        return Err(FdlmError::domain(
                            format!("quadrature nodes of immersed cell {e2} lie outside the background mesh"),
                            outside,
                        ));
                    }
                    // group by host; stable so the summation order is fixed
                    samples.sort_by_key(|s| s.2);
                    let mut out = Local::new();
                    accumulate(lambda, bg, form, e2, &samples, &mut out);
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
    };
    let mut t = crate::sparse::TripletBuilder::with_capacity(
        lambda.ndof(),
        bg.ndof(),
        parts.iter().map(Vec::len).sum(),
    );
    for part in parts {
        for (i, j, v) in part {
            t.add(i, j, v);
        }
    }
    Ok(t.build())
}

/// Row sums of a coupling matrix restricted to the vertex dofs of `space`.
pub fn vertex_row_sums(c: &CsrMatrix, space: &FeSpace) -> Vec<f64> {
    let nv = space.num_vertex_dofs();
    (0..c.nrows())
        .map(|i| c.row(i).filter(|&(j, _)| j < nv).map(|(_, v)| v).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::Constraint;
    use crate::geometry::{BBox, DiskGeometry};
    use crate::mesh::{build_disk_mesh, build_rect_mesh, BoundaryRole, Mesh};
    use std::sync::Arc;

    struct Pair {
        bg: FeSpace,
        lambda: FeSpace,
        v2: FeSpace,
        index: BoxIndex,
        imap: IntersectionMap,
    }

    fn pair(bg: Mesh, im: Mesh, lam: BasisFamily, v2: BasisFamily) -> Pair {
        let index = BoxIndex::build(&bg);
        let imap = IntersectionMap::build(&im, &bg, &index).unwrap();
        let bg = Arc::new(bg);
        let im = Arc::new(im);
        Pair {
            bg: FeSpace::new(bg, BasisFamily::P1, Constraint::None),
            lambda: FeSpace::new(im.clone(), lam, Constraint::None),
            v2: FeSpace::new(im, v2, Constraint::None),
            index,
            imap,
        }
    }

    fn disk_pair(lb: usize, ld: usize, lam: BasisFamily, v2: BasisFamily) -> Pair {
        pair(
            build_rect_mesh(BBox::square(1.4), 4 << lb).unwrap(),
            build_disk_mesh(DiskGeometry::unit(), ld).unwrap(),
            lam,
            v2,
        )
    }

    #[test]
    fn parse_modes() {
        assert_eq!("exact".parse::<AssemblyMode>().unwrap(), AssemblyMode::Exact);
        assert_eq!("inexact:7".parse::<AssemblyMode>().unwrap(), AssemblyMode::Inexact(7));
        assert_eq!("inexact".parse::<AssemblyMode>().unwrap(), AssemblyMode::Inexact(5));
        assert!("inexact:0".parse::<AssemblyMode>().is_err());
        assert!("bogus".parse::<AssemblyMode>().is_err());
        assert_eq!("H1".parse::<CouplingForm>().unwrap(), CouplingForm::H1);
    }

    #[test]
    fn h1_with_p0_is_incompatible() {
        let p = disk_pair(0, 0, BasisFamily::P0, BasisFamily::P1Bubble);
        assert!(matches!(
            assemble_c2(&p.lambda, &p.v2, CouplingForm::H1),
            Err(FdlmError::IncompatibleConfiguration(_))
        ));
        assert!(matches!(
            assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), CouplingForm::H1, AssemblyMode::Exact),
            Err(FdlmError::IncompatibleConfiguration(_))
        ));
    }

    #[test]
    fn c2_l2_p0_rows_sum_to_cell_area() {
        let p = disk_pair(0, 2, BasisFamily::P0, BasisFamily::P1Bubble);
        let c2 = assemble_c2(&p.lambda, &p.v2, CouplingForm::L2).unwrap();
        let sums = vertex_row_sums(&c2, &p.v2);
        for (k, s) in sums.iter().enumerate() {
            assert!((s - p.lambda.mesh().cell_area(k)).abs() < 1e-15);
        }
    }

    #[test]
    fn c2_h1_times_constant_is_multiplier_integral() {
        let p = disk_pair(0, 2, BasisFamily::P1, BasisFamily::P1);
        let c2 = assemble_c2(&p.lambda, &p.v2, CouplingForm::H1).unwrap();
        let ones = p.v2.interpolate(|_| 1.0);
        let lhs = c2.mul_vec(&ones);
        let integrals = crate::fem::assemble_load(&p.lambda, &|_| 1.0).unwrap();
        for (a, b) in lhs.iter().zip(&integrals) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn c2_bubble_entry_against_high_order_oracle() {
        let v = vec![Point2::new(0.2, 0.1), Point2::new(1.5, 0.3), Point2::new(0.4, 1.2)];
        let m = Arc::new(Mesh::new(v, vec![[0, 1, 2]], BoundaryRole::Interface, None).unwrap());
        let lam = FeSpace::new(m.clone(), BasisFamily::P0, Constraint::None);
        let v2 = FeSpace::new(m.clone(), BasisFamily::P1Bubble, Constraint::None);
        let c2 = assemble_c2(&lam, &v2, CouplingForm::L2).unwrap();
        let t = m.triangle(0);
        let q = QuadRule::triangle(10).unwrap();
        let oracle: f64 = triangle_area(&t)
            * q.map(&t).map(|(p, w)| w * eval_local(BasisFamily::P1Bubble, &t, p).values[3]).sum::<f64>();
        assert!((c2.get(0, 3) - oracle).abs() < 1e-14);
        // 27 · 2|T| · 1/120
        assert!((oracle - 0.45 * triangle_area(&t)).abs() < 1e-14);
    }

    #[test]
    fn identical_meshes_give_identical_blocks() {
        let m = build_disk_mesh(DiskGeometry::unit(), 2).unwrap();
        let p = pair(m.clone(), m, BasisFamily::P1, BasisFamily::P1);
        let c2 = assemble_c2(&p.lambda, &p.v2, CouplingForm::L2).unwrap();
        for mode in [AssemblyMode::Exact, AssemblyMode::Inexact(4)] {
            let c1 = assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), CouplingForm::L2, mode).unwrap();
            assert!(c1.max_abs_diff(&c2).unwrap() <= 1e-12, "{mode}");
        }
    }

    #[test]
    fn column_sum_identity_on_disk_pairs() {
        for (lam, v2, forms) in [
            (BasisFamily::P0, BasisFamily::P1Bubble, &[CouplingForm::L2][..]),
            (BasisFamily::P1, BasisFamily::P1, &[CouplingForm::L2, CouplingForm::H1][..]),
        ] {
            for (lb, ld) in [(0, 0), (1, 1), (2, 3), (3, 1)] {
                let p = disk_pair(lb, ld, lam, v2);
                for &form in forms {
                    let c1 = assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), form, AssemblyMode::Exact)
                        .unwrap();
                    let c2 = assemble_c2(&p.lambda, &p.v2, form).unwrap();
                    let s1 = vertex_row_sums(&c1, &p.bg);
                    let s2 = vertex_row_sums(&c2, &p.v2);
                    for (a, b) in s1.iter().zip(&s2) {
                        assert!((a - b).abs() <= 1e-12, "{lam:?} {form} {lb} {ld}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn nested_meshes_exact_equals_inexact() {
        // each immersed cell lies inside one background cell
        let bg = build_rect_mesh(BBox::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)), 2).unwrap();
        let im = build_rect_mesh(BBox::new(Point2::new(0.0, 0.0), Point2::new(0.5, 0.5)), 4).unwrap();
        let p = pair(bg, im, BasisFamily::P1, BasisFamily::P1);
        for form in [CouplingForm::L2, CouplingForm::H1] {
            let ex = assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), form, AssemblyMode::Exact).unwrap();
            let inx = assemble_c1(&p.lambda, &p.bg, &p.index, None, form, AssemblyMode::Inexact(4)).unwrap();
            assert!(ex.max_abs_diff(&inx).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn inexact_approaches_exact_with_degree() {
        let p = disk_pair(1, 2, BasisFamily::P0, BasisFamily::P1Bubble);
        let ex = assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), CouplingForm::L2, AssemblyMode::Exact)
            .unwrap();
        let err = |d| {
            let c = assemble_c1(&p.lambda, &p.bg, &p.index, None, CouplingForm::L2, AssemblyMode::Inexact(d))
                .unwrap();
            c.max_abs_diff(&ex).unwrap()
        };
        let (e2, e8) = (err(2), err(8));
        assert!(e8 < e2, "{e2} {e8}");
    }

    #[test]
    fn inexact_node_outside_is_reported() {
        let bg = build_rect_mesh(BBox::square(0.5), 2).unwrap();
        let im = build_disk_mesh(DiskGeometry::unit(), 0).unwrap();
        let index = BoxIndex::build(&bg);
        let bg = FeSpace::new(Arc::new(bg), BasisFamily::P1, Constraint::None);
        let lam = FeSpace::new(Arc::new(im), BasisFamily::P0, Constraint::None);
        match assemble_c1(&lam, &bg, &index, None, CouplingForm::L2, AssemblyMode::Inexact(5)) {
            Err(FdlmError::DomainViolation { points, .. }) => assert!(!points.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exact_mode_is_thread_count_independent() {
        let p = disk_pair(2, 2, BasisFamily::P1, BasisFamily::P1);
        let a = assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), CouplingForm::H1, AssemblyMode::Exact).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| {
            assemble_c1(&p.lambda, &p.bg, &p.index, Some(&p.imap), CouplingForm::H1, AssemblyMode::Exact).unwrap()
        });
        assert_eq!(a, b);
    }
}
