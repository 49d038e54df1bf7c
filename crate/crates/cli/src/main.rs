use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use seisqubo_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let body = msg.split("\n\nUsage:").next().unwrap_or(&msg);
            let line = body.split_whitespace().collect::<Vec<_>>().join(" ");
            let line = line.trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Usage(line).to_json_line());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
