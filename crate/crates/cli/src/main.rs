use std::process::ExitCode;

use advray_cli::{run, Cli, EXIT_FAULT};
use clap::Parser;

fn init_threads() {
    let Ok(v) = std::env::var("ADVRAY_THREADS") else {
        return;
    };
    let n: usize = match v.trim().parse() {
        Ok(n) => n,
        Err(_) => {
            log::warn!("ignoring ADVRAY_THREADS={v:?}");
            return;
        }
    };
    #[cfg(feature = "parallel")]
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAULT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    init_threads();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAULT as u8)
        }
    }
}
