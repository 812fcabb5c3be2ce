use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use smk_cli::{configure_threads, load_config, run, Overrides};

/// Simulate and solve semi-Markov models with fractional holding times.
#[derive(Debug, Parser)]
#[command(name = "smk", version)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Seed; overrides the config and SMK_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file; overrides `output_path`. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = (|| {
        if let Some(n) = args.threads {
            configure_threads(n.max(1))?;
        }
        let cfg = load_config(&args.config)?;
        run(
            &cfg,
            &Overrides {
                seed: args.seed,
                out: args.out.clone(),
            },
        )
    })();
    match result {
        Ok(summary) => {
            if !args.quiet {
                eprintln!("{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("smk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
