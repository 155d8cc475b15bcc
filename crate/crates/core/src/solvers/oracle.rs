//! Comparison of the assembled Jacobian with a central-difference oracle.

use super::{Assembler, NumericDiff};
use crate::error::Result;

/// Smooth curvature moves one-sided quotients apart by about `h f''/f'`,
/// which stays below 1e-4 for the steps used here.
pub const KINK_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    /// Largest relative entry error over the smooth entries.
    pub max_error: f64,
    /// Entries compared.
    pub entries: usize,
    /// Entries skipped because the residual has a kink (an upwind switch or
    /// a regularization boundary) inside the oracle stencil.
    pub kinked: usize,
}

/// Compares the Jacobian from the assembler's own differencing with central
/// differences of relative step `eps`.
///
/// Entries are compared relative to `max(|c|, floor * max|J|)`. An entry is
/// kinked when the forward and backward quotients over the oracle step
/// disagree by more than [`KINK_THRESHOLD`] in the same measure; the
/// central quotient is then not a derivative of anything and the entry is
/// counted, not compared.
pub fn compare_with_central(
    asm: &mut Assembler,
    u: &[f64],
    eps: f64,
    floor: f64,
) -> Result<OracleReport> {
    let own = asm.differencing();
    let jac = asm.jacobian(u)?;
    asm.set_differencing(NumericDiff::central(eps));
    let central = asm.jacobian(u);
    asm.set_differencing(NumericDiff {
        central: false,
        rel_step: eps,
    });
    let fwd = asm.jacobian(u);
    asm.set_differencing(NumericDiff {
        central: false,
        rel_step: -eps,
    });
    let bwd = asm.jacobian(u);
    asm.set_differencing(own);
    let (central, fwd, bwd) = (central?, fwd?, bwd?);

    let scale = central.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut report = OracleReport {
        max_error: 0.0,
        entries: 0,
        kinked: 0,
    };
    for i in 0..central.nrows() {
        for (j, c) in central.row(i) {
            let denom = c.abs().max(floor * scale);
            if denom == 0.0 {
                continue;
            }
            report.entries += 1;
            if (fwd.get(i, j) - bwd.get(i, j)).abs() / denom > KINK_THRESHOLD {
                report.kinked += 1;
                continue;
            }
            report.max_error = report.max_error.max((jac.get(i, j) - c).abs() / denom);
        }
    }
    Ok(report)
}
