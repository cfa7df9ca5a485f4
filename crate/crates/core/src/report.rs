//! CSV, JSON and VTK output of study runs.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fem::BasisFamily;
use crate::mesh::vtk::{write_vtk, Field};
use crate::study::{LevelOutcome, LevelRecord};

pub const RESULTS_HEADER: &str = "level,ndof,h,h2,errL2_u,errH1_u,errH1_u2,eta,eta2,gmres_its,time_s";

/// `results.csv`. With `zero_time` the timing column is written as 0 so the
/// file depends only on the configuration.
pub fn results_csv(records: &[LevelRecord], zero_time: bool) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in records {
        let t = if zero_time { 0.0 } else { r.time_s };
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e}",
            r.level, r.ndof, r.h, r.h2, r.err_l2_u, r.err_h1_u, r.err_h1_u2, r.eta, r.eta2, r.gmres_its, t
        );
    }
    s
}

/// Rates of the three error norms and of `η + η₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EocTable {
    /// `"h"` or `"ndof"`.
    pub basis: &'static str,
    #[serde(rename = "errL2_u")]
    pub l2_u: Vec<Option<f64>>,
    #[serde(rename = "errH1_u")]
    pub h1_u: Vec<Option<f64>>,
    #[serde(rename = "errH1_u2")]
    pub h1_u2: Vec<Option<f64>>,
    pub eta_total: Vec<Option<f64>>,
}

impl EocTable {
    pub fn h_based(records: &[LevelRecord]) -> Self {
        let hs: Vec<f64> = records.iter().map(|r| r.h).collect();
        Self::build("h", records, |e| crate::benchmark::eoc(e, &hs))
    }

    pub fn dof_based(records: &[LevelRecord]) -> Self {
        let nd: Vec<usize> = records.iter().map(|r| r.ndof).collect();
        Self::build("ndof", records, |e| crate::benchmark::eoc_dofs(e, &nd))
    }

    fn build(basis: &'static str, records: &[LevelRecord], rate: impl Fn(&[f64]) -> Vec<Option<f64>>) -> Self {
        let col = |f: fn(&LevelRecord) -> f64| rate(&records.iter().map(f).collect::<Vec<_>>());
        Self {
            basis,
            l2_u: col(|r| r.err_l2_u),
            h1_u: col(|r| r.err_h1_u),
            h1_u2: col(|r| r.err_h1_u2),
            eta_total: col(|r| r.eta + r.eta2),
        }
    }

    /// One row per level; level 0 and undefined rates are left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,basis,eoc_errL2_u,eoc_errH1_u,eoc_errH1_u2,eoc_eta\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let _ = writeln!(s, "0,{},,,,", self.basis);
        for i in 0..self.l2_u.len() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                i + 1,
                self.basis,
                cell(self.l2_u[i]),
                cell(self.h1_u[i]),
                cell(self.h1_u2[i]),
                cell(self.eta_total[i])
            );
        }
        s
    }
}

/// Run-level facts recorded next to the results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub mode: &'static str,
    pub dorfler_convention: &'static str,
    pub sliver_tol: f64,
    pub default_inexact_degree: usize,
    /// H¹ coupling with inexact assembly.
    pub reduced_accuracy: bool,
    pub serial: bool,
    pub threads: usize,
    pub version: &'static str,
}

impl RunMetadata {
    pub fn new(mode: &'static str, reduced_accuracy: bool, serial: bool) -> Self {
        Self {
            mode,
            dorfler_convention: "squared: sum of marked eta_E^2 >= alpha1^2 * eta^2",
            sliver_tol: crate::intersection::SLIVER_TOL,
            default_inexact_degree: crate::coupling::DEFAULT_INEXACT_DEGREE,
            reduced_accuracy,
            serial,
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary<'a, C: Serialize> {
    pub config: &'a C,
    pub metadata: RunMetadata,
    pub levels: &'a [LevelRecord],
    pub eoc: Vec<EocTable>,
    /// Set when the run stopped early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn summary_json<C: Serialize>(summary: &Summary<'_, C>) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)?)
}

/// Writes `results.csv`, `eoc.csv` (first table) and `summary.json` into `dir`.
pub fn write_run<C: Serialize>(dir: &Path, summary: &Summary<'_, C>, zero_time: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), results_csv(summary.levels, zero_time))?;
    if let Some(t) = summary.eoc.first() {
        std::fs::write(dir.join("eoc.csv"), t.to_csv())?;
    }
    std::fs::write(dir.join("summary.json"), summary_json(summary)?)?;
    Ok(())
}

/// `background_<level>.vtk` with u_h and η_E, `immersed_<level>.vtk` with
/// u₂,h at the vertices, λ_h and η_E2.
pub fn write_level_vtk(dir: &Path, level: usize, out: &LevelOutcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let bg = out.disc.bg_mesh();
    write_vtk(
        dir.join(format!("background_{level}.vtk")),
        bg,
        &format!("background level {level}"),
        &[Field::new("u_h", &out.u_nodal)],
        &[Field::new("eta_E", &out.indicators.eta_e)],
    )?;
    let im = out.disc.im_mesh();
    let u2 = out.u2();
    let u2_vertices = &u2[..im.num_vertices()];
    let lambda = out.lambda();
    let lam = Field::new("lambda_h", lambda);
    let (pd, cd): (Vec<Field<'_>>, Vec<Field<'_>>) = match out.disc.lambda.family() {
        BasisFamily::P0 => (
            vec![Field::new("u2_h", u2_vertices)],
            vec![lam, Field::new("eta_E2", &out.indicators.eta_e2)],
        ),
        _ => (
            vec![Field::new("u2_h", u2_vertices), Field::new("lambda_h", &lambda[..im.num_vertices()])],
            vec![Field::new("eta_E2", &out.indicators.eta_e2)],
        ),
    };
    write_vtk(
        dir.join(format!("immersed_{level}.vtk")),
        im,
        &format!("immersed level {level}"),
        &pd,
        &cd,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::SolveReport;

    fn rec(level: usize, h: f64, e: f64) -> LevelRecord {
        LevelRecord {
            level,
            ndof: 10 << (2 * level),
            h,
            h2: h / 2.0,
            err_l2_u: e * e,
            err_h1_u: e,
            err_h1_u2: e,
            eta: e,
            eta2: 0.0,
            gmres_its: 7,
            time_s: 1.5,
            n: 0,
            n2: 0,
            m: 0,
            bg_cells: 0,
            im_cells: 0,
            report: SolveReport::default(),
            marked_bg: 0,
            marked_bg_cut: 0,
            marked_im: 0,
        }
    }

    #[test]
    fn csv_columns() {
        let rs = [rec(0, 1.0, 0.5), rec(1, 0.5, 0.25)];
        let s = results_csv(&rs, true);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER);
        assert_eq!(lines.len(), 3);
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 11);
            assert!(l.ends_with(",0e0"));
        }
        assert!(results_csv(&rs, false).lines().nth(1).unwrap().ends_with(",1.5e0"));
    }

    #[test]
    fn eoc_tables() {
        let rs = [rec(0, 1.0, 0.5), rec(1, 0.5, 0.25), rec(2, 0.25, 0.125)];
        let t = EocTable::h_based(&rs);
        assert_eq!(t.h1_u, vec![Some(1.0), Some(1.0)]);
        assert_eq!(t.l2_u, vec![Some(2.0), Some(2.0)]);
        let d = EocTable::dof_based(&rs);
        assert!((d.h1_u[0].unwrap() - 1.0).abs() < 1e-14);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().starts_with("2,h,2.000000,1.000000"));
    }
}
