use std::sync::Arc;

use jobgate_cli::{execute, Context};
use jobgate_core::SystemClock;
use tracing_subscriber::EnvFilter;

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let ctx = Context {
        clock: Arc::new(SystemClock),
    };
    let code = execute(
        std::env::args_os(),
        &ctx,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
