//! Restarted, right-preconditioned GMRES.

use std::time::Instant;

use crate::error::{FdlmError, Result};
use crate::sparse::{dot, norm2, CsrMatrix};

use super::SolveReport;

/// A square linear map `y = M x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_into(x, y);
    }
}

/// Approximate inverse `z = P⁻¹ r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

/// The identity preconditioner.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GmresParams {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresParams {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            restart: 200,
            max_iter: 2000,
        }
    }
}

impl GmresParams {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.restart == 0 || self.max_iter == 0 {
            return Err(FdlmError::invalid(format!("bad GMRES parameters {self:?}")));
        }
        Ok(())
    }
}

/// Solves `M x = b` starting from `x` (pass zeros for a cold start).
///
/// The relative residual `‖b − M x‖/‖b‖` is monitored through the Arnoldi
/// recurrence; the true residual is recomputed at every restart and at exit.
/// On failure the report is boxed inside [`FdlmError::NoConvergence`] and `x`
/// holds the last iterate.
pub fn gmres<M, P>(
    op: &M,
    precond: &P,
    b: &[f64],
    x: &mut [f64],
    params: &GmresParams,
) -> Result<SolveReport>
where
    M: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    params.validate()?;
    let n = op.dim();
    if b.len() != n || x.len() != n {
        return Err(FdlmError::invalid(format!(
            "GMRES dimension mismatch: operator {n}, rhs {}, x {}",
            b.len(),
            x.len()
        )));
    }
    let t0 = Instant::now();
    let mut report = SolveReport::default();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        report.converged = true;
        report.history.push(0.0);
        return Ok(report);
    }

    let m = params.restart.min(n.max(1));
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    // Hessenberg columns, each of length j + 2.
    let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut its = 0usize;

    let residual = |x: &[f64], r: &mut [f64]| {
        op.apply(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    };

    residual(x, &mut r);
    let mut beta = norm2(&r);
    report.history.push(beta / bnorm);

    while beta / bnorm > params.tol && its < params.max_iter {
        basis.clear();
        h.clear();
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut k = 0;
        while k < m && its < params.max_iter {
            precond.apply(&basis[k], &mut z)?;
            op.apply(&z, &mut w);
            let mut col = vec![0.0; k + 2];
            // Modified Gram-Schmidt with one reorthogonalization pass.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    col[i] += hij;
                    for (wl, vl) in w.iter_mut().zip(v) {
                        *wl -= hij * vl;
                    }
                }
            }
            let hnext = norm2(&w);
            col[k + 1] = hnext;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            if denom == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = col[k] / denom;
                sn[k] = col[k + 1] / denom;
            }
            col[k] = denom;
            col[k + 1] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            h.push(col);
            its += 1;
            k += 1;
            let est = g[k].abs() / bnorm;
            report.history.push(est);
            if est <= params.tol || hnext <= f64::EPSILON * beta {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // Back substitution for the k-dimensional least-squares problem.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        let mut v = vec![0.0; n];
        for (yj, bj) in y.iter().zip(&basis) {
            for (vl, bl) in v.iter_mut().zip(bj) {
                *vl += yj * bl;
            }
        }
        precond.apply(&v, &mut z)?;
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        residual(x, &mut r);
        let new_beta = norm2(&r);
        if let Some(last) = report.history.last_mut() {
            *last = new_beta / bnorm;
        }
        // Stagnation: the Krylov space is exhausted without progress.
        if k == 0 || (new_beta >= beta && g[k].abs() / bnorm > params.tol) {
            beta = new_beta;
            break;
        }
        beta = new_beta;
    }

    report.iterations = its;
    report.relative_residual = beta / bnorm;
    report.true_relative_residual = beta / bnorm;
    report.timings.solve_s = t0.elapsed().as_secs_f64();
    report.converged = report.relative_residual <= params.tol;
    if report.converged {
        Ok(report)
    } else {
        Err(FdlmError::NoConvergence(Box::new(report)))
    }
}
