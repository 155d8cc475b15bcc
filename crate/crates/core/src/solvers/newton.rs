use super::linear::LinearSolver;
use super::sparse::{norm_inf, CsrMatrix};
use crate::error::{Error, Result};

/// A square nonlinear system `r(u) = 0`.
pub trait NonlinearSystem {
    fn size(&self) -> usize;

    fn residual(&mut self, u: &[f64]) -> Result<Vec<f64>>;

    /// Jacobian and residual at `u`.
    fn linearize(&mut self, u: &[f64]) -> Result<(CsrMatrix, Vec<f64>)>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    pub max_iterations: usize,
    /// Converged once `max_i |du_i| / max(1, |u_i + u_i'| / 2)` drops below.
    pub max_relative_shift: f64,
    /// Or once `|r|_inf <= residual_reduction * |r_0|_inf`.
    pub residual_reduction: f64,
    /// Or once `|r|_inf <= absolute_residual` (disabled at 0).
    pub absolute_residual: f64,
    /// Both shift and residual criteria must hold when set.
    pub require_both: bool,
    pub divergence_factor: f64,
    pub line_search: bool,
    pub linear_solver: LinearSolver,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iterations: 18,
            max_relative_shift: 1e-8,
            residual_reduction: 1e-11,
            absolute_residual: 0.0,
            require_both: false,
            divergence_factor: 10.0,
            line_search: false,
            linear_solver: LinearSolver::Direct,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonReport {
    pub converged: bool,
    pub iterations: usize,
    pub initial_residual: f64,
    pub final_residual: f64,
    pub final_shift: f64,
}

fn relative_shift(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(a, b)| (a - b).abs() / ((a + b).abs() / 2.0).max(1.0))
        .fold(0.0, f64::max)
}

fn finite_norm(r: &[f64]) -> f64 {
    let n = norm_inf(r);
    if r.iter().all(|v| v.is_finite()) {
        n
    } else {
        f64::INFINITY
    }
}

/// Newton's method `A(u) du = r(u)`, `u <- u - du`.
///
/// On any error `u` is left unchanged.
pub fn newton_solve(
    sys: &mut dyn NonlinearSystem,
    u: &mut Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<NewtonReport> {
    if u.len() != sys.size() {
        return Err(Error::LengthMismatch {
            what: "newton initial guess",
            expected: sys.size(),
            got: u.len(),
        });
    }
    let start = u.clone();
    let result = iterate(sys, u, cfg);
    if result.is_err() {
        *u = start;
    }
    result
}

fn iterate(
    sys: &mut dyn NonlinearSystem,
    u: &mut Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<NewtonReport> {
    let (mut a, mut r) = sys.linearize(u)?;
    let r0 = finite_norm(&r);
    if !r0.is_finite() {
        return Err(Error::NewtonDiverged {
            residual: r0,
            limit: f64::MAX,
        });
    }
    let mut report = NewtonReport {
        converged: false,
        iterations: 0,
        initial_residual: r0,
        final_residual: r0,
        final_shift: 0.0,
    };
    if r0 == 0.0 || r0 <= cfg.absolute_residual {
        report.converged = true;
        return Ok(report);
    }
    let limit = cfg.divergence_factor * r0;
    for it in 1..=cfg.max_iterations {
        let du = cfg.linear_solver.solve(&a, &r)?;
        let mut scale = 1.0;
        let mut trial: Vec<f64> = u.iter().zip(&du).map(|(u, d)| u - d).collect();
        let mut rn = finite_norm(&sys.residual(&trial)?);
        let rprev = finite_norm(&r);
        if cfg.line_search {
            let mut halvings = 0;
            while rn > rprev && halvings < 4 {
                scale *= 0.5;
                halvings += 1;
                trial = u.iter().zip(&du).map(|(u, d)| u - scale * d).collect();
                rn = finite_norm(&sys.residual(&trial)?);
            }
        }
        let shift = relative_shift(u, &trial);
        *u = trial;
        report.iterations = it;
        report.final_residual = rn;
        report.final_shift = shift;
        log::debug!("newton iteration {it}: residual {rn:e}, shift {shift:e}");
        if !(rn <= limit) {
            return Err(Error::NewtonDiverged {
                residual: rn,
                limit,
            });
        }
        let shift_ok = shift < cfg.max_relative_shift;
        let res_ok = rn <= cfg.residual_reduction * r0 || rn <= cfg.absolute_residual;
        let done = if cfg.require_both {
            shift_ok && res_ok
        } else {
            shift_ok || res_ok
        };
        if done {
            report.converged = true;
            return Ok(report);
        }
        if it < cfg.max_iterations {
            (a, r) = sys.linearize(u)?;
        }
    }
    Err(Error::NewtonNoConvergence {
        iterations: cfg.max_iterations,
    })
}
