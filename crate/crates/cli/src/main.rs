use clap::Parser;

use dbscd_cli::{execute, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let code = execute(&cli, &mut stdout.lock());
    std::process::exit(code);
}
