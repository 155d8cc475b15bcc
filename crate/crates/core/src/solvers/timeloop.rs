use std::fmt;

use crate::error::{Error, Result};

/// Adaptive backward-Euler time stepping state.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeLoop {
    t: f64,
    dt: f64,
    t_end: f64,
    dt_max: f64,
    dt_min: f64,
    step: usize,
}

/// Emitted after every accepted step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub newton_iterations: usize,
    pub retries: usize,
}

impl fmt::Display for StepReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} t={} dt={} newton={}",
            self.step, self.t, self.dt, self.newton_iterations
        )
    }
}

impl TimeLoop {
    pub fn new(t_start: f64, dt: f64, t_end: f64, dt_max: f64, dt_min: f64) -> Result<Self> {
        if !(dt_min > 0.0 && dt_min <= dt && dt_min <= dt_max) || !(t_end >= t_start) {
            return Err(Error::InvalidArgument(format!(
                "time loop needs 0 < dt_min <= dt, dt_max and t_start <= t_end \
                 (got dt={dt}, dt_min={dt_min}, dt_max={dt_max}, t=[{t_start}, {t_end}])"
            )));
        }
        Ok(TimeLoop {
            t: t_start,
            dt: dt.min(dt_max),
            t_end,
            dt_max,
            dt_min,
            step: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn time_step(&self) -> f64 {
        self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.t_end
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn finished(&self) -> bool {
        self.t >= self.t_end
    }

    /// Next step size after a Newton solve with `iterations` updates.
    pub fn suggest(&self, dt: f64, iterations: usize) -> f64 {
        (dt * (10.0 / (iterations as f64 + 1.0)).min(1.25)).min(self.dt_max)
    }

    /// Advance to `t_end`. `solve(t_new, dt)` returns Newton iterations and
    /// must leave its state untouched on failure; recoverable failures halve
    /// the step.
    pub fn run(
        &mut self,
        solve: impl FnMut(f64, f64) -> Result<usize>,
        mut on_step: impl FnMut(&StepReport) -> Result<()>,
    ) -> Result<()> {
        self.run_while(solve, |r| on_step(r).map(|_| true))
    }

    /// As [`run`](Self::run), but stops early once `on_step` returns false.
    pub fn run_while(
        &mut self,
        mut solve: impl FnMut(f64, f64) -> Result<usize>,
        mut on_step: impl FnMut(&StepReport) -> Result<bool>,
    ) -> Result<()> {
        while !self.finished() {
            let remaining = self.t_end - self.t;
            let mut dt = self.dt.min(self.dt_max);
            // avoid a sliver step at the end
            if dt >= remaining || remaining - dt < 1e-9 * dt {
                dt = remaining;
            }
            let mut retries = 0;
            let iterations = loop {
                match solve(self.t + dt, dt) {
                    Ok(n) => break n,
                    Err(e) if e.is_recoverable() => {
                        log::info!("step {} failed with dt={dt:e}: {e}; halving", self.step + 1);
                        dt *= 0.5;
                        retries += 1;
                        if dt < self.dt_min {
                            return Err(Error::TimeStepUnderflow {
                                dt,
                                dt_min: self.dt_min,
                            });
                        }
                    }
                    Err(e) => return Err(e),
                }
            };
            let at_end = dt == remaining;
            self.t = if at_end { self.t_end } else { self.t + dt };
            self.step += 1;
            let report = StepReport {
                step: self.step,
                t: self.t,
                dt,
                newton_iterations: iterations,
                retries,
            };
            let go_on = on_step(&report)?;
            let grown = self.suggest(dt, iterations);
            // a trimmed final step must not shrink the controller's choice
            self.dt = if at_end { self.dt.max(grown) } else { grown }.max(self.dt_min);
            if !go_on {
                break;
            }
        }
        Ok(())
    }
}
