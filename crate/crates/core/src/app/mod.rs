//! Scenario drivers: parameter handling, output and the three example
//! programs.

pub mod audit;
pub mod convergence;
pub mod fractured2p;
pub mod params;
pub mod rootsoil;
pub mod vtk;

use std::path::PathBuf;

pub use audit::AuditTable;
pub use convergence::run_convergence;
pub use fractured2p::run_fractured2p;
pub use params::{parse_parameters, ParameterTree};
pub use rootsoil::run_rootsoil;
pub use vtk::{write_vtk, Field, OutputSeries};

use crate::error::{Error, Result};
use crate::solvers::{LinearSolver, NewtonConfig, StepReport, TimeLoop};

pub const SCENARIOS: [&str; 3] = ["convergence", "fractured2p", "rootsoil"];

/// Where and how a scenario writes its files.
#[derive(Clone, Debug)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub name: String,
    pub vtk: bool,
    /// Write VTK every this many steps (the final state is always written).
    pub interval: usize,
    /// Print one line per time step.
    pub verbose: bool,
}

impl OutputConfig {
    pub fn from_params(p: &ParameterTree, default_name: &str) -> Result<Self> {
        let interval = p.get_or("Output.Interval", 1usize)?;
        if interval == 0 {
            return Err(Error::InvalidArgument(
                "Output.Interval must be positive".into(),
            ));
        }
        Ok(OutputConfig {
            dir: PathBuf::from(p.get_or("Output.Directory", ".".to_string())?),
            name: p.get_or("Output.Name", default_name.to_string())?,
            vtk: p.get_or("Output.Vtk", true)?,
            interval,
            verbose: p.get_or("Output.Verbose", true)?,
        })
    }

    /// A VTK series, or `None` with VTK output disabled.
    pub fn series(&self, name: &str) -> Result<Option<OutputSeries>> {
        if self.vtk {
            Ok(Some(OutputSeries::new(&self.dir, name)?))
        } else {
            Ok(None)
        }
    }

    pub fn audit_path(&self) -> PathBuf {
        self.dir.join(format!("{}_audit.csv", self.name))
    }

    pub fn write_audit(&self, audit: &AuditTable) -> Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        audit.write(self.audit_path())
    }

    fn wants_vtk(&self, step: usize, last: bool) -> bool {
        self.vtk && (last || step.is_multiple_of(self.interval))
    }

    fn report(&self, r: &StepReport) {
        if self.verbose {
            println!("{r}");
        }
    }
}

/// Newton settings from the `Newton` and `LinearSolver` groups.
pub fn newton_config(p: &ParameterTree) -> Result<NewtonConfig> {
    newton_config_with(p, NewtonConfig::default())
}

pub fn newton_config_with(p: &ParameterTree, d: NewtonConfig) -> Result<NewtonConfig> {
    let solver = p.get_or("LinearSolver.Type", "direct".to_string())?;
    let block = p.get_or("LinearSolver.BlockSize", 2usize)?;
    let linear_solver = match LinearSolver::from_name(&solver, block)? {
        LinearSolver::BiCgStab { block, .. } => LinearSolver::BiCgStab {
            block,
            tol: p.get_or("LinearSolver.Tolerance", 1e-10)?,
            max_iter: p.get_or("LinearSolver.MaxIterations", 2000usize)?,
        },
        direct => direct,
    };
    Ok(NewtonConfig {
        max_iterations: p.get_or("Newton.MaxSteps", d.max_iterations)?,
        max_relative_shift: p.get_or("Newton.MaxRelativeShift", d.max_relative_shift)?,
        residual_reduction: p.get_or("Newton.ResidualReduction", d.residual_reduction)?,
        absolute_residual: p.get_or("Newton.MaxAbsoluteResidual", d.absolute_residual)?,
        require_both: p.get_or("Newton.SatisfyResidualAndShiftCriterion", d.require_both)?,
        divergence_factor: p.get_or("Newton.DivergenceFactor", d.divergence_factor)?,
        line_search: p.get_or("Newton.UseLineSearch", d.line_search)?,
        linear_solver,
    })
}

/// Time loop from the `TimeLoop` group with scenario defaults
/// `(dt, t_end, dt_max)`.
pub fn time_loop(p: &ParameterTree, defaults: (f64, f64, f64)) -> Result<TimeLoop> {
    let dt = p.get_or("TimeLoop.DtInitial", defaults.0)?;
    let t_end = p.get_or("TimeLoop.TEnd", defaults.1)?;
    let dt_max = p.get_or("TimeLoop.MaxTimeStepSize", defaults.2)?;
    let dt_min = p.get_or("TimeLoop.MinTimeStepSize", 1e-3)?;
    TimeLoop::new(0.0, dt, t_end, dt_max, dt_min)
}

/// Dispatches a scenario by name.
pub fn run_scenario(name: &str, p: &ParameterTree) -> Result<()> {
    match name {
        "convergence" => run_convergence(p).map(|_| ()),
        "fractured2p" => run_fractured2p(p).map(|_| ()),
        "rootsoil" => run_rootsoil(p).map(|_| ()),
        other => Err(Error::InvalidArgument(format!(
            "unknown scenario `{other}` (expected one of {})",
            SCENARIOS.join(", ")
        ))),
    }
}
