use clap::Parser;
use sigmmd_cli::{run, Cli, CliError};

#[cfg(feature = "parallel")]
fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("failed to size the thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    // Sequential build: the flag is accepted for interface stability but
    // there is no pool to cap.
    let _ = threads;
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = init_threads(cli.threads).and_then(|()| run(&cli));
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
