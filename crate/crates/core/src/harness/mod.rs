//! Experiment harness: seeding, Monte Carlo summaries, configuration and
//! output files.

pub mod config;
pub mod experiments;
pub mod output;
pub mod seed;
pub mod stats;

use std::path::Path;
use std::sync::Arc;

pub use config::{parse_mesh, ExperimentConfig, ExperimentKind};
pub use experiments::{Check, ExperimentOutcome};
pub use output::{summary_csv, write_outputs};
pub use stats::{pairwise_sum, McSummary};

use crate::error::{Error, Result};
use crate::sim::io::{write_path_binary, write_path_csv};
use crate::sim::simulate_path;

/// Validates the configuration and runs it on a pool of `cfg.workers`
/// threads (0 means one per core). Results do not depend on the pool size.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    pool.install(|| experiments::run_kind(cfg))
        .map_err(|e| e.context(format!("experiment '{}'", cfg.id())))
}

/// Writes the first `cfg.dump_paths` paths as CSV and binary dumps.
pub fn dump_paths(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let spec = cfg.integrand.build()?;
    let grid = Arc::new(ExperimentConfig::grid_for(cfg.mesh)?);
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for i in 0..cfg.dump_paths.min(cfg.n_paths) {
        let path = simulate_path(&spec, grid.clone(), seed::split_seed(cfg.seed, i as u64))?;
        let csv = dir.join(format!("path_{i}.csv"));
        write_path_csv(&path, std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
        let bin = dir.join(format!("path_{i}.bin"));
        write_path_binary(
            &path,
            spec.numeric_id(),
            std::io::BufWriter::new(std::fs::File::create(&bin)?),
        )?;
        written.push(csv);
        written.push(bin);
    }
    Ok(written)
}
