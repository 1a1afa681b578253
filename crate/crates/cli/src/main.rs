use clap::Parser;
use dynnet_cli::{run, Cli};

/// Worker threads for cross-validation; unset means one per core.
const WORKERS_VAR: &str = "DYNNET_WORKERS";

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Ok(raw) = std::env::var(WORKERS_VAR) {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the worker pool: {e}");
                }
            }
            _ => {
                eprintln!("error: {WORKERS_VAR} must be a positive integer, got {raw:?}");
                std::process::exit(2);
            }
        }
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
