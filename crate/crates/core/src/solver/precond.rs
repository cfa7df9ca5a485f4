//! Block-diagonal and block-triangular preconditioners.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{FdlmError, Result};

use super::direct::DirectSolver;
use super::gmres::Preconditioner;
use super::multigrid::{MeshHierarchy, Multigrid, MultigridParams};
use super::system::BlockSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecondVariant {
    None,
    Diag,
    Tri,
}

impl fmt::Display for PrecondVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Diag => "diag",
            Self::Tri => "tri",
        })
    }
}

impl FromStr for PrecondVariant {
    type Err = FdlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Self::None),
            "diag" => Ok(Self::Diag),
            "tri" => Ok(Self::Tri),
            _ => Err(FdlmError::invalid(format!("unknown preconditioner '{s}'"))),
        }
    }
}

/// How the `A` block is inverted; `L` is always factorized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnerA {
    Direct,
    Multigrid(MultigridParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecondConfig {
    pub variant: PrecondVariant,
    pub inner_a: InnerA,
}

impl PrecondConfig {
    pub fn new(variant: PrecondVariant, inner_a: InnerA) -> Self {
        Self { variant, inner_a }
    }

    /// `dd` (direct/direct) or `md` (multigrid/direct).
    pub fn parse_inner(s: &str) -> Result<InnerA> {
        match s.to_ascii_lowercase().as_str() {
            "dd" => Ok(InnerA::Direct),
            "md" => Ok(InnerA::Multigrid(MultigridParams::default())),
            _ => Err(FdlmError::invalid(format!("unknown inner configuration '{s}' (dd or md)"))),
        }
    }

    pub fn inner_label(&self) -> &'static str {
        match self.inner_a {
            InnerA::Direct => "dd",
            InnerA::Multigrid(_) => "md",
        }
    }
}

impl Default for PrecondConfig {
    fn default() -> Self {
        Self::new(PrecondVariant::Tri, InnerA::Direct)
    }
}

enum AInverse {
    Direct(DirectSolver),
    Multigrid(Multigrid),
}

/// A prepared preconditioner for one block system.
pub struct BlockPreconditioner<'a> {
    sys: &'a BlockSystem,
    variant: PrecondVariant,
    a_inv: Option<AInverse>,
    l_inv: Option<DirectSolver>,
    pub setup_s: f64,
    /// Set when multigrid was requested but could not be used.
    pub fell_back_to_direct: bool,
}

impl fmt::Debug for BlockPreconditioner<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockPreconditioner")
            .field("variant", &self.variant)
            .field("setup_s", &self.setup_s)
            .finish()
    }
}

impl<'a> BlockPreconditioner<'a> {
    /// Factorizes the blocks. `hierarchy` must end with the background mesh
    /// of `sys` for the multigrid inner solve; without it the `A` block falls
    /// back to a direct solve.
    pub fn new(
        sys: &'a BlockSystem,
        cfg: &PrecondConfig,
        hierarchy: Option<&MeshHierarchy>,
        nu: f64,
    ) -> Result<Self> {
        let t0 = Instant::now();
        let mut fell_back = false;
        let (a_inv, l_inv) = if cfg.variant == PrecondVariant::None {
            (None, None)
        } else {
            let a_inv = match (cfg.inner_a, hierarchy) {
                (InnerA::Multigrid(p), Some(h)) if h.num_levels() > 1 => {
                    let mg = Multigrid::new(h, nu, p)?;
                    if mg.matrix().nrows() != sys.n() {
                        return Err(FdlmError::invalid(
                            "multigrid hierarchy does not match the background space",
                        ));
                    }
                    AInverse::Multigrid(mg)
                }
                (InnerA::Multigrid(_), _) => {
                    log::warn!("no mesh hierarchy available; inverting A directly");
                    fell_back = true;
                    AInverse::Direct(DirectSolver::cholesky(&sys.a)?)
                }
                (InnerA::Direct, _) => AInverse::Direct(DirectSolver::cholesky(&sys.a)?),
            };
            (Some(a_inv), Some(DirectSolver::lu(&sys.l_block())?))
        };
        Ok(Self {
            sys,
            variant: cfg.variant,
            a_inv,
            l_inv,
            setup_s: t0.elapsed().as_secs_f64(),
            fell_back_to_direct: fell_back,
        })
    }

    fn apply_a_inv(&self, r: &[f64], z: &mut [f64]) {
        match self.a_inv.as_ref().expect("prepared") {
            AInverse::Direct(d) => {
                z.copy_from_slice(r);
                d.solve_in_place(z);
            }
            AInverse::Multigrid(mg) => z.copy_from_slice(&mg.solve_approx(r)),
        }
    }
}

impl Preconditioner for BlockPreconditioner<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        if self.variant == PrecondVariant::None {
            z.copy_from_slice(r);
            return Ok(());
        }
        let n = self.sys.n();
        let (r1, r23) = r.split_at(n);
        let (z1, z23) = z.split_at_mut(n);
        self.apply_a_inv(r1, z1);
        z23.copy_from_slice(r23);
        if self.variant == PrecondVariant::Tri {
            let z3 = &mut z23[self.sys.n2()..];
            self.sys.c1.mul_vec_add(-1.0, z1, z3);
        }
        self.l_inv.as_ref().expect("prepared").solve_in_place(z23);
        Ok(())
    }
}
