use clap::Parser;
use hnabem::cli::{init_threads, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("hnabem: {e}");
        std::process::exit(e.code);
    }
}
