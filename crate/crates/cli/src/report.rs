//! Exit codes and the per-run report of the solver.

use std::fmt;
use std::time::Duration;

use twopt_core::dealternation::Bounds;

/// Process exit status of every command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    CheckFailed = 1,
    ParseError = 2,
    GuardExceeded = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Text a command writes to standard output and standard error, with its exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    pub exit: Exit,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    pub fn new(exit: Exit, stdout: impl Into<String>, stderr: impl Into<String>) -> Self {
        CommandOutput { exit, stdout: stdout.into(), stderr: stderr.into() }
    }

    pub fn error(exit: Exit, message: impl fmt::Display) -> Self {
        CommandOutput::new(exit, "", format!("error: {message}\n"))
    }
}

/// One named check, grouped under the acceptance suite it belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
}

/// Widths, bound values, check outcomes and timings of one solver run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub instance: String,
    pub input_width: usize,
    pub optimum_width: usize,
    pub bounds: Bounds,
    pub checks: Vec<Check>,
    pub timings: Vec<(&'static str, Duration)>,
}

impl RunReport {
    pub fn new(instance: &str, input_width: usize) -> Self {
        RunReport {
            instance: instance.to_string(),
            input_width,
            optimum_width: 0,
            bounds: Bounds::new(input_width),
            checks: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn check(&mut self, suite: &'static str, name: impl Into<String>, passed: bool) {
        self.checks.push(Check { suite, name: name.into(), passed });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The report as text; timings are included only on request so that runs
    /// on identical inputs print identical reports.
    pub fn render(&self, with_timings: bool) -> String {
        let mut out = self.to_string();
        if with_timings {
            for (stage, d) in &self.timings {
                out.push_str(&format!("time {stage} {:.3}ms\n", d.as_secs_f64() * 1e3));
            }
        }
        out
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.bounds;
        writeln!(out, "instance {}", self.instance)?;
        writeln!(out, "width input={} optimum={}", self.input_width, self.optimum_width)?;
        writeln!(out, "bounds k={} f={} g={} h={}", self.input_width, b.f(), b.g(), b.h())?;
        for c in &self.checks {
            writeln!(out, "{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name)?;
        }
        Ok(())
    }
}
