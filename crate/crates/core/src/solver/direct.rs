//! Sparse direct solves backed by faer.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{MatMut, Side};

use crate::error::{FdlmError, Result};
use crate::sparse::{norm2, CsrMatrix};

/// Relative forward error of the round-trip check below which a
/// factorization is accepted. Loose on purpose: the saddle-point L block of
/// locally refined meshes has condition numbers near 1e10, and only a
/// garbage factor should be refused.
const PROBE_TOL: f64 = 1e-3;
/// Relative residual of the round-trip check.
const RESIDUAL_TOL: f64 = 1e-10;

enum Factor {
    Llt(Box<Llt<usize, f64>>),
    Lu(Box<Lu<usize, f64>>),
}

/// A factorized square sparse matrix.
pub struct DirectSolver {
    n: usize,
    factor: Factor,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.factor {
            Factor::Llt(_) => "llt",
            Factor::Lu(_) => "lu",
        };
        f.debug_struct("DirectSolver").field("n", &self.n).field("kind", &kind).finish()
    }
}

fn to_faer(a: &CsrMatrix) -> Result<SparseColMat<usize, f64>> {
    let trip: Vec<Triplet<usize, usize, f64>> = a
        .triplets()
        .map(|(row, col, val)| Triplet { row, col, val })
        .collect();
    SparseColMat::try_new_from_triplets(a.nrows(), a.ncols(), &trip)
        .map_err(|e| FdlmError::Internal(format!("sparse conversion failed: {e:?}")))
}

fn check_square(a: &CsrMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(FdlmError::FactorizationFailure(format!(
            "matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Err(FdlmError::invalid("cannot factorize an empty matrix"));
    }
    Ok(())
}

impl DirectSolver {
    /// LU with partial pivoting; handles indefinite saddle blocks.
    pub fn lu(a: &CsrMatrix) -> Result<Self> {
        check_square(a)?;
        let lu = to_faer(a)?
            .sp_lu()
            .map_err(|e| FdlmError::FactorizationFailure(format!("LU: {e:?}")))?;
        Self::probed(a, Factor::Lu(Box::new(lu)))
    }

    /// Sparse Cholesky for symmetric positive definite matrices.
    pub fn cholesky(a: &CsrMatrix) -> Result<Self> {
        check_square(a)?;
        let llt = to_faer(a)?
            .sp_cholesky(Side::Lower)
            .map_err(|e| FdlmError::FactorizationFailure(format!("Cholesky: {e:?}")))?;
        Self::probed(a, Factor::Llt(Box::new(llt)))
    }

    /// Rejects numerically singular factors by solving with a known solution.
    fn probed(a: &CsrMatrix, factor: Factor) -> Result<Self> {
        let s = Self {
            n: a.nrows(),
            factor,
        };
        let x: Vec<f64> = (0..s.n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_749_895).fract())
            .collect();
        let b = a.mul_vec(&x);
        let mut y = b.clone();
        s.solve_in_place(&mut y);
        let err: f64 = norm2(&x.iter().zip(&y).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm2(&x);
        let mut r = a.mul_vec(&y);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri -= bi;
        }
        let res = norm2(&r) / norm2(&b).max(f64::MIN_POSITIVE);
        if !err.is_finite() || err > PROBE_TOL || !(res <= RESIDUAL_TOL) {
            return Err(FdlmError::FactorizationFailure(format!(
                "matrix of size {} is numerically singular (round-trip error {err:.3e}, residual {res:.3e})",
                s.n
            )));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "right-hand side length");
        let rhs = MatMut::from_column_major_slice_mut(x, self.n, 1);
        match &self.factor {
            Factor::Llt(f) => f.solve_in_place(rhs),
            Factor::Lu(f) => f.solve_in_place(rhs),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
