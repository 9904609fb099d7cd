//! Canned suites: every scenario of a suite, run concurrently, reports in catalog order.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::catalog::suite;
use crate::error::Result;
use crate::run::{run_scenario, RunOptions, RunReport};

/// Runs a suite. With an output directory each scenario writes into `<out>/<scenario>/`.
pub fn run_repro(name: &str, out: Option<PathBuf>, snapshot_every: usize) -> Result<Vec<RunReport>> {
    let scenarios = suite(name)?;
    scenarios
        .par_iter()
        .map(|s| {
            let opts = RunOptions {
                out: out.as_ref().map(|d| d.join(s.name())),
                snapshot_every,
                converge: false,
            };
            run_scenario(&s.config, &opts)
        })
        .collect()
}
