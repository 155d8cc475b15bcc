//! Assembly, sparse linear algebra, Newton's method and time stepping.

mod assembler;
mod krylov;
mod linear;
mod lu;
mod newton;
mod oracle;
mod sparse;
mod timeloop;

pub use assembler::{
    Assembler, CouplingContext, CouplingManager, NoCoupling, NumericDiff, ResidualParts, Subdomain,
};
pub use krylov::{bicgstab, BlockJacobi, KrylovReport};
pub use linear::LinearSolver;
pub use lu::SparseLu;
pub use newton::{newton_solve, NewtonConfig, NewtonReport, NonlinearSystem};
pub use oracle::{compare_with_central, OracleReport, KINK_THRESHOLD};
pub use sparse::{norm2, norm_inf, BlockSystem, CsrMatrix, TripletMatrix};
pub use timeloop::{StepReport, TimeLoop};

#[cfg(test)]
mod tests;
