use std::process::ExitCode;

use clap::Parser;
use srde_cli::{resolve, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(&cli.options).and_then(|s| run(cli.command, &s, cli.options.threads));
    match outcome {
        Ok(out) => {
            for line in &out.messages {
                println!("{line}");
            }
            for f in &out.files {
                eprintln!("wrote {}", f.display());
            }
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
