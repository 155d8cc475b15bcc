use super::krylov::{bicgstab, BlockJacobi};
use super::lu::SparseLu;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum LinearSolver {
    /// Sparse LU with one refinement step.
    #[default]
    Direct,
    /// BiCGStab with a block-Jacobi preconditioner of the given block size.
    BiCgStab {
        block: usize,
        tol: f64,
        max_iter: usize,
    },
}

impl LinearSolver {
    pub fn iterative(block: usize) -> Self {
        LinearSolver::BiCgStab {
            block,
            tol: 1e-10,
            max_iter: 2000,
        }
    }

    pub fn from_name(name: &str, block: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "direct" | "lu" => Ok(LinearSolver::Direct),
            "bicgstab" => Ok(LinearSolver::iterative(block)),
            other => Err(Error::InvalidArgument(format!(
                "unknown linear solver '{other}'"
            ))),
        }
    }

    pub fn solve(&self, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
        match *self {
            LinearSolver::Direct => SparseLu::factor(a)?.solve_refined(a, b),
            LinearSolver::BiCgStab {
                block,
                tol,
                max_iter,
            } => {
                let pc = BlockJacobi::new(a, block)?;
                let mut x = vec![0.0; b.len()];
                bicgstab(a, b, &mut x, &pc, tol, max_iter)?;
                Ok(x)
            }
        }
    }
}
