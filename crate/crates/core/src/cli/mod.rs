//! Experiment runner behind the `wulffstab` binary.
//!
//! Each subcommand computes its tables and checks in memory first and writes
//! artifacts only once everything succeeded, so an error never leaves partial
//! output. The run passes iff every check passes.

mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::ExperimentConfig;
pub use report::{Cell, Table};

use crate::error::Result;
use crate::io::write_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Wulff,
    Curvature,
    Kernel,
    Center,
    Sweep,
    Einstein,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Wulff, Command::Curvature, Command::Kernel, Command::Center, Command::Sweep, Command::Einstein];

    pub fn name(self) -> &'static str {
        match self {
            Command::Wulff => "wulff",
            Command::Curvature => "curvature",
            Command::Kernel => "kernel",
            Command::Center => "center",
            Command::Sweep => "sweep",
            Command::Einstein => "einstein",
        }
    }
}

/// One invariant or certificate with its measured value.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub subject: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-12`.
    pub rule: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, subject: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), subject: subject.into(), value, rule: format!("<= {bound:e}"), pass: value <= bound }
    }

    pub fn at_least(name: &str, subject: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), subject: subject.into(), value, rule: format!(">= {bound:e}"), pass: value >= bound }
    }

    pub fn within(name: &str, subject: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            subject: subject.into(),
            value,
            rule: format!("{target} +- {tol}"),
            pass: (value - target).abs() <= tol,
        }
    }

    pub fn flag(name: &str, subject: impl Into<String>, value: f64, pass: bool, rule: &str) -> Self {
        Self { name: name.into(), subject: subject.into(), value, rule: rule.into(), pass }
    }
}

/// Everything a subcommand produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Extra text artifacts `(file name, contents)`.
    pub files: Vec<(String, String)>,
    /// Tables plotted with `--svg`: `(table, x column, y columns)`.
    pub plots: Vec<(String, String, Vec<String>)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn checks_table(&self, command: Command) -> Table {
        let mut t = Table::new(&format!("{}_checks", command.name()), &["check", "subject", "value", "rule", "pass"]);
        for c in &self.checks {
            t.push(vec![c.name.as_str().into(), c.subject.as_str().into(), c.value.into(), c.rule.as_str().into(), c.pass.into()]);
        }
        t
    }

    /// Writes all artifacts into `dir`; returns the written paths with the
    /// checks report first.
    pub fn write(&self, command: Command, dir: &Path, svg: bool) -> Result<Vec<PathBuf>> {
        let mut paths = self.checks_table(command).write(dir)?;
        for t in &self.tables {
            paths.extend(t.write(dir)?);
        }
        for (name, contents) in &self.files {
            let p = dir.join(name);
            write_atomic(&p, contents)?;
            paths.push(p);
        }
        if svg {
            for (table, x, ys) in &self.plots {
                let Some(t) = self.tables.iter().find(|t| &t.name == table) else { continue };
                let ys: Vec<&str> = ys.iter().map(String::as_str).collect();
                if let Some(s) = t.svg(x, &ys) {
                    let p = dir.join(format!("{table}.svg"));
                    write_atomic(&p, &s)?;
                    paths.push(p);
                }
            }
        }
        Ok(paths)
    }
}

/// Runs one subcommand; `seed` overrides the configured seed.
pub fn execute(command: Command, config: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    match command {
        Command::Wulff => commands::wulff(config, seed),
        Command::Curvature => commands::curvature(config),
        Command::Kernel => commands::kernel(config, seed),
        Command::Center => commands::center(config),
        Command::Sweep => commands::sweep(config),
        Command::Einstein => commands::einstein(config, seed),
    }
}
