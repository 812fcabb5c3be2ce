//! Command-line front end for `smk-core`: reads a JSON run configuration,
//! dispatches the task and writes CSV grids or JSON reports.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod locate;
pub mod output;
pub mod tasks;
pub mod validate;

use std::path::{Path, PathBuf};

use smk_core::Execution;

pub use config::{parse_config, parse_config_with, RunConfig, Task};
pub use error::{CliError, ConfigError};

/// Command-line overrides applied on top of the configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

/// Size the global worker pool. Has no effect without the `parallel` feature.
pub fn configure_threads(n: usize) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Output(format!("cannot size the thread pool: {e}")))?;
    let _ = n;
    Ok(())
}

/// Run the configured task and write its output. Returns the summary line.
/// A `validate` run with failing checks still writes its table before
/// returning [`CliError::ChecksFailed`].
pub fn run(cfg: &RunConfig, overrides: &Overrides) -> Result<String, CliError> {
    let mut cfg = cfg.clone();
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    let out = tasks::execute(&cfg, Execution::Parallel)?;
    match overrides.out.as_ref().or(cfg.output_path.as_ref()) {
        Some(path) => std::fs::write(path, &out.bytes)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&out.bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Output(format!("cannot write to stdout: {e}")))?;
        }
    }
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.summary),
    }
}
