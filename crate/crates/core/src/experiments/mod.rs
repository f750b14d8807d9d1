//! Configuration-driven parameter scans over disorder and fugacity.
//!
//! A [`RunConfig`] (TOML, versioned by [`SCHEMA_VERSION`]) selects one
//! experiment. Work items are `(h, zeta, sample)` triples; sample `k` uses the
//! seed `base_seed ^ k` at every grid point. Results are gathered in job order
//! and written by a single writer as CSV tables (17 significant digits, a
//! leading `# config:` line with the resolved configuration) plus JSON
//! sidecars.

mod config;
mod runs;
mod table;
mod verify;

use std::path::PathBuf;

pub use config::{ExperimentKind, ReferenceOptions, RunConfig, ScanGrid, SolverOptions, SCHEMA_VERSION};
pub use runs::{
    dynamics_sample, nh_spectral_sample, run_dynamics_scan, run_nh_spectral_scan, run_references, run_spectral_scan,
    run_tebd, run_transient, spectral_sample, SteadySample,
};
pub use table::{tag, write_tables, Cell, Table};
pub use verify::{checks_table, verify, Check};

use crate::ensemble::with_threads;
use crate::Result;

/// Validates `cfg` and computes its tables; an empty grid yields none.
pub fn run(cfg: &RunConfig) -> Result<Vec<Table>> {
    cfg.validate()?;
    if cfg.grid_is_empty() {
        return Ok(Vec::new());
    }
    with_threads(cfg.threads, || runs::dispatch(cfg))
}

/// [`run`] followed by [`write_tables`] into `cfg.out`.
pub fn run_and_write(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let tables = run(cfg)?;
    write_tables(&cfg.out, cfg, &tables)
}
