use std::process::ExitCode;

use clap::Parser;
use homentropy::cli::{run, Cli, Command, EXIT_CONFIG};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global() {
                eprintln!("error: cannot start worker pool: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
            ExitCode::from(run(&args))
        }
    }
}
