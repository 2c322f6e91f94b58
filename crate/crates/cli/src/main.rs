use clap::Parser;
use oamsim_cli::config::Args;

fn main() {
    let args = Args::parse();
    let env_seed = std::env::var("OAMSIM_SEED").ok();
    if let Err(e) = oamsim_cli::execute(&args, env_seed.as_deref()) {
        eprintln!("oamsim: {e}");
        std::process::exit(e.exit_code());
    }
}
